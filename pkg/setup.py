from setuptools import setup


setup(
    name="im-auditor",
    version="0.1.0",
    description="Build and audit inferential models from partial prior information",
    packages=["im_auditor"],
    package_data={
        "im_auditor": [
            "bundled/models/*.model",
        ]
    },
    include_package_data=True,
    install_requires=[
        "numpy",
        "scipy",
        "pandas",
        "chardet",
    ],
    extras_require={
        "test": ["hypothesis", "coverage[toml]"],
    },
    entry_points={
        "console_scripts": [
            "im-auditor=im_auditor.cli:main",
        ]
    },
)
