# LUT compiler toolchain
__version__ = "1.0.0"
