"""setuptools installation script for spotflow package."""

from setuptools import setup

setup()
