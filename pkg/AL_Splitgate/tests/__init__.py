## Tested Module
import AL_Splitgate
from AL_Splitgate import Images, Ingest
## Third Party
import numpy as np
## Builtin
import json
import pathlib
import tempfile
import unittest

DIRECTORY = pathlib.Path(__file__).resolve().parent
DATAFILE = (DIRECTORY / "splitgatetests.json").resolve()

def loaddata():
    """ Loads testdata from DATAFILE """
    with open(DATAFILE,'r') as f:
        data = json.load(f)
    ## Hex strings keep the 64-bit vectors readable in the jsonfile
    random = data['RANDOM']
    random['xorshift_from_state_1'] = [int(value, 16) for value in random['xorshift_from_state_1']]
    random['splitmix64_of_0'] = int(random['splitmix64_of_0'], 16)
    return data

DATA = loaddata()

def noiseimage(rng: np.random.Generator, width: int = 32, height: int = 32)-> Images.GrayImage:
    """ Uniform random 8-bit image """
    return Images.GrayImage(rng.integers(0, 256, size = (height, width)).astype(np.uint8))

def noisedcopy(rng: np.random.Generator, image: Images.GrayImage, amplitude: int = 2)-> Images.GrayImage:
    """ The image plus clamped integer noise in [-amplitude, amplitude] """
    noise = rng.integers(-amplitude, amplitude + 1, size = image.pixels.shape)
    return Images.GrayImage(np.clip(image.pixels.astype(np.int64) + noise, 0, 255).astype(np.uint8))

def ramp(width: int = 18, height: int = 16)-> Images.GrayImage:
    """ Horizontal ramp: strictly increasing along every row """
    row = np.linspace(0, 255, width).round().astype(np.uint8)
    return Images.GrayImage(np.tile(row, (height, 1)))

def writetree(root: pathlib.Path, files: dict)-> None:
    """ Writes a fixture tree; values are GrayImages (saved as PGM) or raw bytes """
    for relative, content in files.items():
        path = root / relative
        path.parent.mkdir(parents = True, exist_ok = True)
        if isinstance(content, Images.GrayImage): Images.write_pgm(path, content)
        else: path.write_bytes(content)

def record(id: str, class_label: str, subject: str|None = None, **fields)-> Ingest.ImageRecord:
    """ ImageRecord without a backing file """
    return Ingest.ImageRecord(id = id, path = f"/nonexistent/{id}", class_label = class_label, subject = subject, **fields)

def groupedmanifest(layout: dict[str, dict[str, int]])-> Ingest.Manifest:
    """ Builds a file-less manifest from {class: {subject: image count}} """
    records = []
    for label, subjects in layout.items():
        for subject, count in subjects.items():
            for i in range(count):
                records.append(record(f"{label}/{subject}/{i:03d}", label, subject, volume = subject, slice_index = i))
    return Ingest.Manifest(records)

class TempDirCase(unittest.TestCase):
    """ TestCase owning a temporary directory at self.directory """
    def setUp(self):
        self._tempdir = tempfile.TemporaryDirectory()
        self.directory = pathlib.Path(self._tempdir.name)
        return super().setUp()

    def tearDown(self):
        self._tempdir.cleanup()
        return super().tearDown()


if __name__ == "__main__":
    import unittest
    import pathlib
    path = pathlib.Path.cwd()
    tests = unittest.TestLoader().discover(path)
    unittest.TextTestRunner().run(tests)
