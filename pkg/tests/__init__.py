"""Test package for adaptcast"""
