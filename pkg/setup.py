"""
Setup configuration for the DS-II simulator.
"""
from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

with open("requirements.txt", "r", encoding="utf-8") as fh:
    requirements = [line.split("#", 1)[0].strip() for line in fh if line.strip() and not line.startswith("#")]

setup(
    name="ds2-simulator",
    version="0.1.0",
    author="cosmic soul",
    author_email="stallionsprite@gmail.com",
    description="A pseudospectral Picard-Duhamel simulator for the Davey-Stewartson-II system",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Programming Language :: Python :: 3.13",
    ],
    python_requires=">=3.11",
    install_requires=requirements,
    entry_points={
        'console_scripts': [
            'ds2sim=ds2sim:main',
        ],
    },
)
