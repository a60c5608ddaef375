"""Test suite for the cpol package."""
