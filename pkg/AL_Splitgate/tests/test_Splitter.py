## Test Framework
import unittest
## Testing utilities
from AL_Splitgate import tests
## Test Target
from AL_Splitgate import Splitter, Ingest, Errors
from AL_Splitgate.Random import XorShift64, derive_seed
## Builtin
import collections

def generatedlayout(rng: XorShift64)-> dict[str, dict[str, int]]:
    """ 2-4 classes, 2-20 groups per class, 1-60 images per group """
    return {f"class{c}": {f"c{c}g{g:02d}": 1 + rng.below(60) for g in range(2 + rng.below(19))}
            for c in range(2 + rng.below(3))}

class SplitCase(unittest.TestCase):
    def test_generated_manifests(self):
        """ per_group splits never share a group; both strategies partition the manifest """
        for i in range(200):
            rng = XorShift64(derive_seed(2020, i))
            layout = generatedlayout(rng)
            manifest = tests.groupedmanifest(layout)
            smallest = min(count for groups in layout.values() for count in groups.values())
            test_per_class = 1 + rng.below(smallest)
            seed = rng.next()
            with self.subTest(manifest = i):
                plan = Splitter.make_split(manifest, Splitter.SplitConfig("per_group", "subject", test_per_class, seed))
                self.assertEqual(Splitter.audit_overlap(plan.train_ids, plan.test_ids, manifest, "subject").fraction, 0.0)
                self.assertEqual(sorted(plan.train_ids + plan.test_ids), sorted(manifest.ids()))
                self.assertTrue(plan.train_ids)

                plan = Splitter.make_split(manifest, Splitter.SplitConfig("per_image", "subject", test_per_class, seed))
                self.assertEqual(sorted(plan.train_ids + plan.test_ids), sorted(manifest.ids()))
                self.assertEqual(len(set(plan.train_ids) & set(plan.test_ids)), 0)
                self.assertEqual(set(plan.test_counts.values()), {test_per_class})

    def test_per_image_counts(self):
        manifest = tests.groupedmanifest({f"c{c}": {f"c{c}s{s}": 100 for s in range(11)} for c in range(4)})
        plan = Splitter.make_split(manifest, Splitter.SplitConfig("per_image", test_per_class = 1000, seed = 1))
        self.assertEqual(plan.test_counts, {"c0": 1000, "c1": 1000, "c2": 1000, "c3": 1000})
        self.assertEqual(len(plan.test_ids), 4000)
        self.assertEqual(plan.overshoot, {"c0": 0, "c1": 0, "c2": 0, "c3": 0})

    def test_two_groups(self):
        manifest = tests.groupedmanifest({"a": {"s1": 5, "s2": 5}, "b": {"s3": 5, "s4": 5}})
        plan = Splitter.make_split(manifest, Splitter.SplitConfig("per_group", "subject", 5, 3))
        self.assertEqual(Splitter.audit_overlap(plan.train_ids, plan.test_ids, manifest).fraction, 0.0)
        self.assertEqual(plan.test_counts, {"a": 5, "b": 5})

    def test_overshoot(self):
        manifest = tests.groupedmanifest({"a": {f"s{i}": 3 for i in range(4)}})
        plan = Splitter.make_split(manifest, Splitter.SplitConfig("per_group", "subject", 4, 0))
        self.assertEqual(plan.test_counts, {"a": 6})
        self.assertEqual(plan.overshoot, {"a": 2})

    def test_shared_group_across_classes(self):
        """ A subject with images in two classes moves as a whole """
        manifest = Ingest.Manifest([tests.record("a1", "a", "s1"), tests.record("a2", "a", "s2"), tests.record("a3", "a", "s3"),
                                    tests.record("b1", "b", "s1"), tests.record("b2", "b", "s4"), tests.record("b3", "b", "s5")])
        for seed in range(20):
            plan = Splitter.make_split(manifest, Splitter.SplitConfig("per_group", "subject", 1, seed))
            with self.subTest(seed = seed):
                self.assertEqual(Splitter.audit_overlap(plan.train_ids, plan.test_ids, manifest).fraction, 0.0)
                self.assertIn({"a1", "b1"} & set(plan.test_ids), (set(), {"a1", "b1"}))

    def test_shared_group_keeps_training_side(self):
        """ A later class never pulls in a shared subject holding an earlier class's last training image """
        manifest = tests.groupedmanifest({"a": {"s1": 1, "s2": 1}, "b": {"s2": 1, "s3": 1, "s4": 1}})
        for seed in range(200):
            plan = Splitter.make_split(manifest, Splitter.SplitConfig("per_group", "subject", 1, seed))
            trainlabels = {manifest[id].class_label for id in plan.train_ids}
            with self.subTest(seed = seed):
                self.assertEqual(trainlabels, {"a", "b"})
                self.assertEqual(plan.overshoot["a"], 0)
                self.assertEqual(Splitter.audit_overlap(plan.train_ids, plan.test_ids, manifest).fraction, 0.0)

    def test_shared_group_unreachable(self):
        manifest = tests.groupedmanifest({"a": {"s1": 1, "s2": 1}, "b": {"s1": 1, "s2": 1, "s3": 1}})
        for seed in range(10):
            with self.subTest(seed = seed), self.assertRaises(Errors.SingleGroupClass):
                Splitter.make_split(manifest, Splitter.SplitConfig("per_group", "subject", 2, seed))

    def test_deterministic(self):
        manifest = tests.groupedmanifest({"a": {f"s{i}": 4 for i in range(10)}, "b": {f"t{i}": 4 for i in range(10)}})
        config = Splitter.SplitConfig("per_group", "subject", 8, 42)
        self.assertEqual(Splitter.make_split(manifest, config), Splitter.make_split(manifest, config))
        plan = Splitter.make_split(manifest, config)
        self.assertEqual(Splitter.SplitPlan.from_dict(plan.to_dict()), plan)
        self.assertEqual(plan.config, config)

    def test_errors(self):
        manifest = tests.groupedmanifest({"a": {"s1": 3, "s2": 3}, "b": {"s3": 6}})
        with self.assertRaises(Errors.InsufficientImages):
            Splitter.make_split(manifest, Splitter.SplitConfig("per_image", test_per_class = 7))
        with self.assertRaises(Errors.SingleGroupClass):
            Splitter.make_split(manifest, Splitter.SplitConfig("per_group", test_per_class = 2))
        manifest = tests.groupedmanifest({"a": {"s1": 3, "s2": 3}})
        with self.assertRaises(Errors.SingleGroupClass):
            Splitter.make_split(manifest, Splitter.SplitConfig("per_group", test_per_class = 5))
        manifest = Ingest.Manifest([tests.record("x", "a", "s1"), tests.record("y", "a", None)])
        with self.assertRaises(Errors.MissingGroupKey):
            Splitter.make_split(manifest, Splitter.SplitConfig("per_group", test_per_class = 1))
        with self.assertRaises(ValueError):
            Splitter.SplitConfig("per_slice")

class PresplitCase(unittest.TestCase):
    def test_given_split(self):
        manifest = Ingest.Manifest([tests.record("tr", "a", "s1", presplit = "train"), tests.record("va", "a", "s2", presplit = "val"),
                                    tests.record("te", "a", "s1", presplit = "test")])
        plan = Splitter.split_from_presplit(manifest)
        self.assertEqual((plan.train_ids, plan.test_ids), (["tr", "va"], ["te"]))
        self.assertEqual(Splitter.split_from_presplit(manifest, include_val = False).train_ids, ["tr"])
        self.assertEqual(Splitter.audit_overlap(plan.train_ids, plan.test_ids, manifest).fraction, 1.0)
        with self.assertRaises(Errors.EmptyTest):
            Splitter.split_from_presplit(manifest.subset(["tr"]))

class CVPlanCase(unittest.TestCase):
    def setUp(self):
        self.manifest = tests.groupedmanifest({"a": {f"a{i}": 3 + i for i in range(7)}, "b": {f"b{i}": 2 + i for i in range(6)},
                                               "c": {f"c{i}": 4 for i in range(5)}})
        return super().setUp()

    def test_partitions(self):
        plan = Splitter.make_cv_plan(self.manifest, 5, 10, seed = 1)
        self.assertEqual(len(plan.fold_of), 10)
        for repeat in range(10):
            folds = plan.folds(repeat)
            with self.subTest(repeat = repeat):
                self.assertEqual(sorted(id for fold in folds for id in fold), sorted(self.manifest.ids()))
                sizes = [len(fold) for fold in folds]
                self.assertLessEqual(max(sizes) - min(sizes), 1)
                for label, records in self.manifest.by_class().items():
                    counts = collections.Counter(plan.fold_of[repeat][record.id] for record in records)
                    self.assertLessEqual(max(counts.values()) - min(counts.get(fold, 0) for fold in range(5)), 1)
        self.assertNotEqual(plan.fold_of[0], plan.fold_of[1])

    def test_grouped(self):
        plan = Splitter.make_cv_plan(self.manifest, 5, 3, grouped = True, group_key = "subject", seed = 9)
        for repeat, fold, train, evaluation in plan.pairs():
            with self.subTest(repeat = repeat, fold = fold):
                self.assertEqual(Splitter.audit_overlap(train, evaluation, self.manifest).fraction, 0.0)
                self.assertEqual(sorted(train + evaluation), sorted(self.manifest.ids()))
        self.assertEqual(len(list(plan.pairs())), 15)

    def test_deterministic(self):
        first = Splitter.make_cv_plan(self.manifest, 5, 2, grouped = True, seed = 4)
        self.assertEqual(first.to_dict(), Splitter.make_cv_plan(self.manifest, 5, 2, grouped = True, seed = 4).to_dict())
        self.assertEqual(Splitter.CVPlan.from_dict(first.to_dict()), first)
        self.assertNotEqual(first.to_dict(), Splitter.make_cv_plan(self.manifest, 5, 2, grouped = True, seed = 5).to_dict())

    def test_errors(self):
        manifest = tests.groupedmanifest({"a": {"s1": 10}, "b": {"s2": 5, "s3": 5}})
        with self.assertRaises(Errors.TooFewGroups):
            Splitter.make_cv_plan(manifest, 2, 1, grouped = True)
        with self.assertRaises(Errors.TooFewImages):
            Splitter.make_cv_plan(tests.groupedmanifest({"a": {"s1": 3}}), 5, 1)
        with self.assertRaises(ValueError):
            Splitter.make_cv_plan(manifest, 1, 1)

class OverlapCase(unittest.TestCase):
    def setUp(self):
        train = [tests.record(f"train{i:02d}", "a", f"s{i % 5}") for i in range(20)]
        shared = [tests.record(f"test{i:02d}", "a", f"s{i % 5}") for i in range(23)]
        unseen = [tests.record(f"test{i:02d}", "a", f"new{i}") for i in range(23, 25)]
        self.manifest = Ingest.Manifest(train + shared + unseen)
        self.train = [record.id for record in train]
        self.test = [record.id for record in shared + unseen]
        return super().setUp()

    def test_fixture(self):
        report = Splitter.audit_overlap(self.train, self.test, self.manifest, "subject")
        self.assertEqual(report.test_total, 25)
        self.assertEqual(report.test_with_shared_group, 23)
        self.assertEqual(report.fraction, 0.92)
        self.assertEqual(report.shared_groups, ["s0", "s1", "s2", "s3", "s4"])

    def test_extremes(self):
        self.assertEqual(Splitter.audit_overlap(self.train, self.test[23:], self.manifest).fraction, 0.0)
        self.assertEqual(Splitter.audit_overlap(self.train, self.test[:23], self.manifest).fraction, 1.0)

    def test_ungrouped(self):
        manifest = Ingest.Manifest([tests.record("x", "a", "s1"), tests.record("y", "a", "s1"), tests.record("z", "a", None)])
        report = Splitter.audit_overlap(["x"], ["y", "z"], manifest)
        self.assertEqual((report.test_total, report.ungrouped, report.fraction), (1, 1, 1.0))
        volume = Splitter.audit_overlap(["x"], ["y", "z"], manifest, "volume")
        self.assertEqual((volume.test_total, volume.fraction), (0, 0.0))

    def test_errors(self):
        with self.assertRaises(Errors.EmptyTest):
            Splitter.audit_overlap(self.train, [], self.manifest)
        with self.assertRaises(Errors.UnknownId):
            Splitter.audit_overlap(self.train, ["nope"], self.manifest)

if __name__ == "__main__":
    unittest.main()
