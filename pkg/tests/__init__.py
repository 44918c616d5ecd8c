"""
Test suite for coarse-spectra.

Modified: 2026-10-19
"""
