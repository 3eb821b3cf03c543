"""
Pytest configuration and fixtures for testing.

Provides canonical germs, a 50-digit working precision for every test, and an API client.
"""

from fractions import Fraction

import mpmath
import pytest
from fastapi.testclient import TestClient

from app.main import app
from app.parser import parse_dulac


@pytest.fixture(autouse=True)
def precision():
    """Run every test at 50 decimal digits."""
    with mpmath.workdps(50):
        yield


@pytest.fixture
def client():
    """Create a test client for the API."""
    with TestClient(app) as test_client:
        yield test_client


@pytest.fixture
def rational_germ():
    """x/(1+x) through x^9: its Fatou coordinate is exactly 1/x."""
    return parse_dulac("x*(1+x)^-1", Fraction(9))


@pytest.fixture
def quadratic_germ():
    """The polynomial germ x - x^2."""
    return parse_dulac("x - x^2")


@pytest.fixture
def log_germ():
    """x - x^2*l^-1, whose leading Fatou block has coefficients (n-1)!."""
    return parse_dulac("x - x^2*l^-1")


@pytest.fixture
def germ_file(tmp_path):
    """Write a .germ file and return its path."""

    def write(text, name="germ.germ"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    return write
