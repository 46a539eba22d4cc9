import pytest
from fastapi.testclient import TestClient

from main import app


@pytest.fixture
def client():
    with TestClient(app) as test_client:
        yield test_client


class TestService:
    def test_root(self, client):
        response = client.get("/")
        assert response.status_code == 200
        assert response.json()["status"] == "healthy"

    def test_health(self, client):
        response = client.get("/health")
        assert response.status_code == 200
        body = response.json()
        assert body["healthy"]
        assert body["catalog_size"] == 13


class TestCatalogEndpoints:
    def test_catalog_by_dimension(self, client):
        response = client.get("/api/catalog", params={"d": 5})
        assert response.status_code == 200
        assert {e["name"] for e in response.json()} == {"quintit", "quintit-qubit"}

    def test_catalog_rejects_bad_form(self, client):
        assert client.get("/api/catalog", params={"form": "matrix"}).status_code == 422

    def test_bound(self, client):
        response = client.get("/api/bound/quartit")
        assert response.status_code == 200
        assert response.json()["classical_max"] == "12"

    def test_unknown_name(self, client):
        response = client.get("/api/bound/quartet")
        assert response.status_code == 404
        assert "quartit" in response.json()["detail"]

    def test_tight(self, client):
        response = client.get("/api/tight/qutrit")
        assert response.status_code == 200
        assert response.json()["is_facet"]

    def test_tight_guard(self, client):
        assert client.get("/api/tight/trivial-d6").status_code == 413

    def test_tight_on_correlation_form(self, client):
        assert client.get("/api/tight/chsh").status_code == 400


class TestQuantumEndpoints:
    def test_violate(self, client):
        response = client.post("/api/violate", json={"name": "quartit"})
        assert response.status_code == 200
        body = response.json()
        assert body["value"] == pytest.approx(68 / 3, abs=1e-9)
        assert body["threshold_kind"] == "fidelity"

    def test_violate_noise_out_of_range(self, client):
        response = client.post("/api/violate", json={"name": "quartit", "noise": 2})
        assert response.status_code == 422

    def test_violate_state_mismatch(self, client):
        response = client.post("/api/violate", json={"name": "quartit", "state": "w"})
        assert response.status_code == 400

    def test_ghz4_table(self, client):
        response = client.get("/api/ghz4-table")
        assert response.status_code == 200
        body = response.json()
        assert body["matches"]
        assert len(body["rows"]) == 32
        assert body["lhs"] == pytest.approx(68 / 3, abs=1e-9)
