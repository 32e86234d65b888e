from setuptools import find_packages, setup

with open("requirements.txt") as f:
    required_packages = f.read().splitlines()

with open("README.md") as f:
    long_description = f.read()

setup(
    name="fredholm",
    version="0.1.0",
    description="Laurent expansion of inverted matrix pencils and I(1)/I(2) autoregressive representations",
    long_description=long_description,
    long_description_content_type="text/markdown",
    python_requires=">=3.9",
    packages=find_packages(exclude=["tests"]),
    install_requires=required_packages,
    include_package_data=True,
    scripts=["bin/fredholm"],
    classifiers=[
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Development Status :: 3 - Alpha",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
)
