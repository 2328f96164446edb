import pytest

from commands.common import count_arg, make_ladder, resolve
from config import get_bool_env, get_float_env, get_int_env
from errors import ConfigError


class TestEnvironmentHelpers:
    def test_int_accepts_integral_float(self, monkeypatch):
        monkeypatch.setenv("KOOPTEMPER_TEST_INT", "1e7")
        assert get_int_env("KOOPTEMPER_TEST_INT", 5) == 10_000_000

    def test_int_rejects_fraction(self, monkeypatch):
        monkeypatch.setenv("KOOPTEMPER_TEST_INT", "1.5")
        with pytest.raises(ValueError, match="KOOPTEMPER_TEST_INT"):
            get_int_env("KOOPTEMPER_TEST_INT", 5)

    def test_int_default_when_unset_or_blank(self, monkeypatch):
        monkeypatch.delenv("KOOPTEMPER_TEST_INT", raising=False)
        assert get_int_env("KOOPTEMPER_TEST_INT", 5) == 5
        monkeypatch.setenv("KOOPTEMPER_TEST_INT", "  ")
        assert get_int_env("KOOPTEMPER_TEST_INT", 5) == 5

    @pytest.mark.parametrize("value, expected", [("true", True), ("1", True), ("On", True),
                                                 ("false", False), ("0", False), ("nope", False)])
    def test_bool(self, monkeypatch, value, expected):
        monkeypatch.setenv("KOOPTEMPER_TEST_BOOL", value)
        assert get_bool_env("KOOPTEMPER_TEST_BOOL") is expected

    def test_float(self, monkeypatch):
        monkeypatch.setenv("KOOPTEMPER_TEST_FLOAT", "2.5e-1")
        assert get_float_env("KOOPTEMPER_TEST_FLOAT", 1.0) == 0.25
        monkeypatch.setenv("KOOPTEMPER_TEST_FLOAT", "warm")
        with pytest.raises(ValueError):
            get_float_env("KOOPTEMPER_TEST_FLOAT", 1.0)


class TestFlagHelpers:
    def test_count_arg(self):
        assert count_arg("12") == 12
        assert count_arg("1e7") == 10_000_000
        with pytest.raises(ValueError):
            count_arg("2.5")

    def test_resolve_order(self):
        class Args:
            seed = None
            temps = 7

        manifest = {"settings": {"seed": 3, "temps": 4}}
        assert resolve(Args, manifest, "temps", 12) == 7
        assert resolve(Args, manifest, "seed", 0) == 3
        assert resolve(Args, None, "seed", 0) == 0
        assert resolve(Args, manifest, "sweeps", 100) == 100

    def test_make_ladder(self):
        ladder = make_ladder(0.5, 50.0, 3)
        assert ladder.betas[0] == pytest.approx(0.5)
        assert ladder.betas[-1] == pytest.approx(50.0)
        assert make_ladder(1.0, 4.0, 1).betas == (4.0,)
        with pytest.raises(ConfigError):
            make_ladder(1.0, 4.0, 0)
