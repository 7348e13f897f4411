from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
    import numpy as np
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("dctlm._ext", ["src/dctlm/_ext.pyx"],
                   include_dirs=[np.get_include()],
                   extra_compile_args=["-O3", "-march=native", "-ffast-math"],
                   extra_link_args=["-lmvec"])],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
