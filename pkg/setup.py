from setuptools import setup

from pathlib import Path

this_directory = Path(__file__).parent
long_description = (this_directory / "README.md").read_text()

setup(
    name="rdsurv",
    version="0.1.0",
    description="Regression discontinuity estimates for right censored time-to-event outcomes",
    long_description=long_description,
    long_description_content_type="text/markdown",
    url="https://varkenvarken.github.io/rdsurv/",
    author="varkenvarken",
    author_email="test@example.com",
    license="GPLv3",
    packages=["rdsurv"],
    python_requires=">=3.8",
    install_requires=[
        "numpy",
        "scipy",
        "pandas",
        "lifelines",
        "joblib",
        "pyyaml",
    ],
    entry_points={"console_scripts": ["rdsurv=rdsurv.__main__:main"]},
    zip_safe=False,
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "License :: OSI Approved :: GNU General Public License v3 (GPLv3)",
        "Operating System :: OS Independent",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
)
