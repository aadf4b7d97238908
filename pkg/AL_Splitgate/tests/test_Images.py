## Test Framework
import unittest
## Testing utilities
from AL_Splitgate import tests
## Test Target
from AL_Splitgate import Images
from AL_Splitgate.Errors import DecodeFailure, IoFailure
## Third Party
import numpy as np
from PIL import Image

class GrayImageCase(unittest.TestCase):
    def test_from_values(self):
        image = Images.GrayImage.from_values(3, 2, [0, 1, 2, 10, 11, 12])
        self.assertEqual((image.width, image.height), (3, 2))
        self.assertEqual(image.pixels.tolist(), [[0, 1, 2], [10, 11, 12]])

    def test_from_values_errors(self):
        with self.assertRaises(ValueError):
            Images.GrayImage.from_values(3, 2, [0, 1, 2])
        with self.assertRaises(ValueError):
            Images.GrayImage.from_values(1, 1, [256])

    def test_mirrored(self):
        image = Images.GrayImage.from_values(3, 1, [1, 2, 3])
        self.assertEqual(image.mirrored().pixels.tolist(), [[3, 2, 1]])
        self.assertEqual(image.pixels.tolist(), [[1, 2, 3]])

class PGMCase(tests.TempDirCase):
    def test_encode_read(self):
        image = tests.noiseimage(np.random.default_rng(1), 7, 5)
        decoded = Images.read_pgm(Images.encode_pgm(image))
        self.assertTrue(np.array_equal(decoded.pixels, image.pixels))

    def test_header_comments(self):
        data = b"P5\n# made by hand\n2 2\n# maxval next\n255\n" + bytes([1, 2, 3, 4])
        self.assertEqual(Images.read_pgm(data).pixels.tolist(), [[1, 2], [3, 4]])

    def test_decode_failures(self):
        for name, data in [("ascii", b"P2\n2 2\n255\n1 2 3 4"),
                           ("sixteenbit", b"P5\n1 1\n65535\n" + bytes(2)),
                           ("truncated", b"P5\n4 4\n255\n" + bytes(3)),
                           ("garbage", b"not an image")]:
            with self.subTest(name = name), self.assertRaises(DecodeFailure):
                Images.read_pgm(data, name)

    def test_write_load(self):
        image = tests.ramp()
        path = self.directory / "ramp.pgm"
        Images.write_pgm(path, image)
        self.assertTrue(np.array_equal(Images.load_gray(path).pixels, image.pixels))

    def test_write_failure(self):
        with self.assertRaises(IoFailure):
            Images.write_pgm(self.directory / "missing" / "x.pgm", tests.ramp())

    def test_pillow_gray(self):
        path = self.directory / "gray.png"
        Image.fromarray(np.array([[0, 50], [100, 255]], dtype = np.uint8)).save(path)
        self.assertEqual(Images.load_gray(path).pixels.tolist(), [[0, 50], [100, 255]])

    def test_pillow_rgb(self):
        """ RGB is reduced with the rounded integer luminance weights """
        path = self.directory / "rgb.png"
        pixels = np.array([[[255, 0, 0], [0, 255, 0], [0, 0, 255], [255, 255, 255]]], dtype = np.uint8)
        Image.fromarray(pixels).save(path)
        self.assertEqual(Images.load_gray(path).pixels.tolist(), [[76, 150, 29, 255]])

    def test_undecodable(self):
        path = self.directory / "broken.png"
        path.write_bytes(b"definitely not a png")
        with self.assertRaises(DecodeFailure):
            Images.load_gray(path)
        with self.assertRaises(DecodeFailure):
            Images.load_gray(self.directory / "absent.png")

if __name__ == "__main__":
    unittest.main()
