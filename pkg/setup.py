"""Setup script for picost-workbench package."""

from setuptools import setup
from pathlib import Path

# Read the README file
this_directory = Path(__file__).parent
long_description = (this_directory / "README.md").read_text()

setup(
    name="picost-workbench",
    version="1.0.0",
    author="Picost Contributors",
    description="Costed pi-calculus workbench: weighted execution and amortised bisimulation checking",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=["picost"],
    package_data={"picost": ["corpus/*"]},
    classifiers=[
        "Development Status :: 4 - Beta",
        "Environment :: Console",
        "Intended Audience :: Developers",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering",
    ],
    python_requires=">=3.8",
    install_requires=[
        "click>=8.1.0",
        "rich>=13.0.0",
        "python-dotenv>=1.0.0",
        "lark>=1.1.0",
        "pydantic>=2.0.0",
    ],
    entry_points={
        "console_scripts": [
            "picost=picost.cli:main",
        ],
    },
    include_package_data=True,
    zip_safe=False,
)
