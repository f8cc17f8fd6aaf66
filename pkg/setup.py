from setuptools import setup, find_packages

setup(
    name="diffusion_mpc",
    version="0.1.0",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    package_data={"diffusion_mpc.config": ["default_config.yaml", "schemas/*.json"]},
    install_requires=[
        "numpy>=1.24.0",
        "scipy>=1.10.0",
        "torch>=2.1.0",
        "pandas>=2.0.0",
        "pydantic>=2.0.0",
        "python-dotenv>=1.0.0",
        "pyyaml>=6.0.1",
        "jsonschema>=4.17.0",
        "prometheus-client>=0.19.0",
        "tqdm>=4.65.0",
    ],
    extras_require={
        "test": [
            "pytest>=7.4.3",
            "pytest-cov>=4.1.0",
            "pytest-mock>=3.12.0",
            "pytest-timeout>=2.2.0",
            "pytest-xdist>=3.3.1",
        ],
    },
    entry_points={
        "console_scripts": ["diffusion-mpc=diffusion_mpc.harness.cli:main"],
    },
    python_requires=">=3.9",
)
