import setuptools

with open("README.md", "r") as fh:
    long_description = fh.read()

setuptools.setup(
    name="AL_Splitgate",
    version="1.0.0",
    author="AdamantLife",
    author_email="",
    description="Train/test leakage audits, leakage-safe splits and the random-label probe for image datasets",
    long_description=long_description,
    long_description_content_type="text/markdown",
    url="https://github.com/AdamantLife/AL_Splitgate",
    packages=setuptools.find_packages(),
    package_data={
        "AL_Splitgate": ["presets.json"],
        "AL_Splitgate.tests": ["splitgatetests.json"],
        },
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: GNU General Public License (GPL)",
        "Operating System :: OS Independent",
    ],
    python_requires='>=3.10',
    install_requires=[
        "openpyxl",
        "numpy",
        "scipy",
        "pandas",
        "Pillow",
        ],
    entry_points={
        "console_scripts": ["splitgate=AL_Splitgate.CLI:main"],
        },
)
