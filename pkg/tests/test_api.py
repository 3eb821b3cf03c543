"""
Unit tests for the REST API endpoints.

Tests the formal, flow, eval and verify endpoints of the Fatou coordinate service.
"""

import math

import pytest

RATIONAL_GERM = "x*(1+x)^-1\n# numeric: x/(1+x)\n"


class TestHealthCheck:
    """Tests for the health check endpoint."""

    def test_health_check(self, client):
        """Test that health check returns healthy status."""
        response = client.get("/api/health")

        assert response.status_code == 200
        assert response.json() == {"status": "healthy"}


class TestFormal:
    """Tests for the formal expansion endpoint."""

    def test_rational_germ(self, client):
        """x/(1+x) has the single block 1/x."""
        response = client.post("/api/formal", json={"germ": RATIONAL_GERM, "N": 6})

        assert response.status_code == 200
        expansion = response.json()["expansion"]
        assert expansion["text"] == "x^-1"
        assert len(expansion["blocks"]) == 1
        assert expansion["blocks"][0]["beta"] == "-1/1"
        assert expansion["blocks"][0]["kind"] == "infinite"
        assert expansion["rho"] == "0/1"
        assert expansion["residual_order"] is None

    def test_factorial_coefficients(self, client):
        """The leading block of x - x^2*l^-1 has coefficients (n-1)!."""
        response = client.post("/api/formal", json={"germ": "x - x^2*l^-1", "N": 3, "M": 8})

        assert response.status_code == 200
        terms = response.json()["expansion"]["blocks"][0]["expansion"]["terms"]
        assert [t["l"] for t in terms] == list(range(1, 9))
        assert [t["coefficient"] for t in terms] == [f"{math.factorial(n - 1)}/1" for n in range(1, 9)]

    @pytest.mark.parametrize("germ, fragment", [
        ("x + foo", "unknown symbol"),
        ("x^2", "not parabolic"),
    ])
    def test_parse_errors(self, client, germ, fragment):
        """Syntax and validation errors are unprocessable."""
        response = client.post("/api/formal", json={"germ": germ})

        assert response.status_code == 422
        assert fragment in response.json()["detail"]

    def test_truncation_below_alpha1(self, client):
        """N smaller than the displacement order is a solver error."""
        response = client.post("/api/formal", json={"germ": "x - x^3", "N": 2})

        assert response.status_code == 400
        assert "alpha1" in response.json()["detail"]


class TestFlow:
    """Tests for the generator cross-check endpoint."""

    def test_normal_form(self, client):
        response = client.post("/api/flow", json={"normal_form": "1,2,0,1", "N": 5})

        assert response.status_code == 200
        data = response.json()
        assert data["equal"] is True
        assert data["rho"] == "1/1"

    def test_square_generator(self, client):
        response = client.post("/api/flow", json={"xi": "-x^2", "N": 4})

        assert response.status_code == 200
        assert response.json()["expansion"]["text"] == "x^-1"

    def test_needs_a_generator(self, client):
        response = client.post("/api/flow", json={"N": 4})

        assert response.status_code == 422


class TestNumeric:
    """Tests for evaluation and verification."""

    def test_eval(self, client):
        """With the default anchor 1/e the block 1/x evaluates to 1/x - e."""
        response = client.post(
            "/api/eval",
            json={"germ": RATIONAL_GERM, "points": [0.02], "digits": 20},
        )

        assert response.status_code == 200
        value = response.json()["values"][0]
        assert value["orbit_method"] == "vanishing"
        assert float(value["value"]) == pytest.approx(1 / 0.02 - math.e, rel=1e-12)

    def test_eval_point_outside_domain(self, client):
        response = client.post("/api/eval", json={"germ": RATIONAL_GERM, "points": [0.5]})

        assert response.status_code == 400
        assert "outside" in response.json()["detail"]

    def test_verify(self, client):
        response = client.post(
            "/api/verify",
            json={"germ": RATIONAL_GERM, "grid": "1e-2:1e-1:3", "digits": 20},
        )

        assert response.status_code == 200
        data = response.json()
        assert data["passed"] is True
        assert len(data["rows"]) == 3
        assert float(data["max_residual"]) < 1e-9

    def test_verify_bad_grid(self, client):
        response = client.post("/api/verify", json={"germ": RATIONAL_GERM, "grid": "1e-2:1e-1"})

        assert response.status_code == 422
        assert "grid" in response.json()["detail"]
