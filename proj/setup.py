from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup

ext = Pybind11Extension(
    "mgnm._mgnm",
    sources=[
        "bindings/module.cpp",
        "src/dataio.cpp",
        "src/model.cpp",
        "src/trainer.cpp",
        "src/evaluator.cpp",
        "src/checkpoint.cpp",
    ],
    include_dirs=["include", "vendor"],
    cxx_std=20,
)

setup(ext_modules=[ext], cmdclass={"build_ext": build_ext})
