# Marks gerrygrid as a Python package.
__version__ = "1.0.0"
