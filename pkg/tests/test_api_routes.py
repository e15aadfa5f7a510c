"""
Tests for the JSON API blueprint
"""

import pytest

from app import create_app
from services.errors import VerificationError


@pytest.fixture
def client():
    app = create_app({'TESTING': True})
    return app.test_client()


@pytest.fixture
def text(fixture_path):
    def read(name):
        return fixture_path(name).read_text(encoding="utf-8")
    return read


ROTATED = "atoms: a, b, c\nleft: (a, b, c)\nright: (b, c, a)\n"


class TestGeneralize:
    """POST /api/generalize"""

    def test_rigid_generalization(self, client, text):
        """Positive Test: the rigid lgg of the two_lggs problem"""
        response = client.post('/api/generalize', json={'problem': text("two_lggs.vnau"),
                                                        'algorithm': 'rigid'})
        assert response.status_code == 200
        data = response.get_json()
        assert data['count'] == 1
        assert data['problem'] == 'request'
        assert data['results'][0]['generalization'] == "b.f(X1, b, X2)"

    def test_default_algorithm(self, client, text):
        """Positive Test: general with minimization keeps the gap lgg among its results"""
        response = client.post('/api/generalize', json={'problem': text("two_lggs.vnau")})
        assert response.status_code == 200
        data = response.get_json()
        assert data['algorithm'] == 'general'
        assert data['count'] > 2
        assert "b.f(X1, b, X2)" in [r['generalization'] for r in data['results']]

    def test_missing_problem(self, client):
        """Negative Test: the problem text is required"""
        response = client.post('/api/generalize', json={'algorithm': 'rigid'})
        assert response.status_code == 400
        assert response.get_json()['error'] == 'problem text is required'

    def test_not_json(self, client):
        """Negative Test: a form body is rejected"""
        response = client.post('/api/generalize', data="left: a")
        assert response.status_code == 400

    def test_syntax_error(self, client):
        """Negative Test: parse errors come back as 400 with their position"""
        response = client.post('/api/generalize',
                               json={'problem': "atoms: a\nfuns: f\nleft: f(a)\nright: f(b)\n"})
        assert response.status_code == 400
        assert "4:10: undeclared identifier 'b'" in response.get_json()['error']

    def test_unknown_algorithm(self, client, text):
        """Negative Test: option values are validated"""
        response = client.post('/api/generalize', json={'problem': text("two_lggs.vnau"),
                                                        'algorithm': 'fast'})
        assert response.status_code == 400
        assert "unknown algorithm" in response.get_json()['error']

    def test_non_positive_limit(self, client, text):
        """Negative Test: limits must be at least 1"""
        response = client.post('/api/generalize', json={'problem': text("two_lggs.vnau"),
                                                        'max_results': 0})
        assert response.status_code == 400

    def test_explicit_atom_list(self, client, text):
        """Positive Test: atoms may be sent as a list"""
        response = client.post('/api/generalize', json={'problem': text("two_lggs.vnau"),
                                                        'algorithm': 'rigid', 'atoms': ['a', 'b', 'c', 'd']})
        assert response.status_code == 200
        assert response.get_json()['atom_base'] == ['a', 'b', 'c', 'd']

    def test_verification_failure(self, client, text, mocker):
        """Negative Test: an unverifiable result is a server error"""
        mocker.patch('routes.api_routes.run', side_effect=VerificationError("right input not reproduced"))
        response = client.post('/api/generalize', json={'problem': text("two_lggs.vnau")})
        assert response.status_code == 500
        assert response.get_json()['error'] == "right input not reproduced"


class TestLimits:
    """Application limits cap what a request may ask for"""

    def test_config_caps_results(self, fixture_path):
        """Positive Test: MAX_RESULTS=1 truncates the 41 results"""
        client = create_app({'TESTING': True, 'MAX_RESULTS': 1}).test_client()
        problem = fixture_path("forty_one.vnau").read_text(encoding="utf-8")
        response = client.post('/api/generalize', json={'problem': problem, 'max_results': 500})
        data = response.get_json()
        assert response.status_code == 200
        assert data['truncated'] is True
        assert data['count'] == 1

    def test_environment_sets_limits(self, monkeypatch):
        """Positive Test: VNAU_MAX_STATES overrides the default"""
        monkeypatch.setenv("VNAU_MAX_STATES", "25")
        app = create_app({'TESTING': True})
        assert app.config['MAX_STATES'] == 25
        assert app.config['MAX_RESULTS'] == 1_000

    def test_explicit_config_wins(self, monkeypatch):
        """Edge Case: the factory argument beats the environment"""
        monkeypatch.setenv("VNAU_MAX_RESULTS", "7")
        app = create_app({'MAX_RESULTS': 3})
        assert app.config['MAX_RESULTS'] == 3

    def test_requested_limit_is_passed(self, client, text, mocker):
        """Positive Test: a smaller requested limit is used as is"""
        pipeline = mocker.patch('routes.api_routes.run', side_effect=VerificationError("stop"))
        client.post('/api/generalize', json={'problem': text("two_lggs.vnau"), 'max_states': 40})
        config = pipeline.call_args.args[0]
        assert config.limits.max_states == 40
        assert config.limits.max_results == 1_000


class TestAlignments:
    """POST /api/alignments"""

    def test_rotated_hedge(self, client):
        """Positive Test: the longest common subsequence of a rotation"""
        response = client.post('/api/alignments', json={'problem': ROTATED})
        data = response.get_json()
        assert response.status_code == 200
        assert data['left_word'] == ['a', 'b', 'c']
        assert data['right_word'] == ['b', 'c', 'a']
        assert data['count'] == 1
        assert data['alignments'][0]['text'] == "b<2,1>c<3,2>"
        assert data['alignments'][0]['entries'][0] == {'symbol': 'b', 'left': 2, 'right': 1}

    def test_minimal_length(self, client):
        """Edge Case: lcs-min=3 rejects the length 2 alignment"""
        response = client.post('/api/alignments', json={'problem': ROTATED, 'rigidity': 'lcs-min=3'})
        assert response.get_json()['count'] == 0

    def test_unknown_rigidity(self, client):
        """Negative Test: unknown rigidity names"""
        response = client.post('/api/alignments', json={'problem': ROTATED, 'rigidity': 'edit'})
        assert response.status_code == 400

    def test_missing_problem(self, client):
        """Negative Test: empty body"""
        assert client.post('/api/alignments', json={}).status_code == 400
