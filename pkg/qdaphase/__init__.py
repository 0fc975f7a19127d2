# qdaphase package: high-dimensional QDA under the rare-and-weak model

__version__ = "1.0.0"
