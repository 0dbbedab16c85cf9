"""Simulator and analysis toolkit for push-pull gradient tracking with device sampling."""

__version__ = "0.1.0"
