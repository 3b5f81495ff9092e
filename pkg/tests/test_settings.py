import pytest

from src.features.export import export_json
from src.features.session import MANIFEST_NAME, MAX_RECENT_RUNS, RecentRun, RunManifest, SessionManager
from src.features.settings import SettingsManager


def test_settings_round_trip(isolated_settings):
    settings = SettingsManager()
    assert settings.defaults() == {}
    settings.set_workers(4)
    settings.set_far_multiplier(6.0)
    settings.set_seed(2**64 - 1)
    settings.set_out_dir("/tmp/runs")
    settings.sync()

    reloaded = SettingsManager(str(isolated_settings))
    assert reloaded.defaults() == {"workers": 4, "far_multiplier": 6.0, "seed": 2**64 - 1}
    assert reloaded.get_out_dir() == "/tmp/runs"


def test_reset_clears_everything(isolated_settings):
    settings = SettingsManager()
    settings.set_workers(2)
    settings.reset()
    assert settings.get_workers() is None
    assert settings.get_recent_runs() == []


def _run_dir(root, name, config, seed=7):
    path = root / name
    path.mkdir()
    manifest = RunManifest(config, seed)
    manifest.finish()
    export_json(path / MANIFEST_NAME, manifest.as_dict())
    return str(path)


def test_recent_runs_are_capped_and_ordered(isolated_settings, tmp_path):
    settings = SettingsManager()
    session = SessionManager(settings)
    paths = [_run_dir(tmp_path, f"run{k}", {"resolved": {"experiment": "CoalSlow"}}) for k in range(MAX_RECENT_RUNS + 2)]
    for path in paths:
        session.add_recent_run(path)
    session.add_recent_run(paths[5])
    runs = session.get_recent_runs()
    assert len(runs) == MAX_RECENT_RUNS
    assert runs[0].path == paths[5]
    assert runs[0].label == "CoalSlow" and runs[0].master_seed == 7


def test_recent_runs_drop_directories_without_manifest(isolated_settings, tmp_path):
    settings = SettingsManager()
    session = SessionManager(settings)
    kept = _run_dir(tmp_path, "kept", {"plan": {"quick": True}})
    bare = tmp_path / "bare"
    bare.mkdir()
    for path in [kept, str(bare), str(tmp_path / "gone")]:
        session.add_recent_run(path)
    runs = session.get_recent_runs()
    assert [run.path for run in runs] == [kept]
    assert runs[0].label == "verify"
    assert settings.get_recent_runs() == [kept]


@pytest.mark.parametrize(
    "config, label",
    [
        ({"resolved": [{"experiment": "CoalSlow"}, {"experiment": "ExitTail"}]}, "sweep:CoalSlow,ExitTail"),
        ({"resolved": {"experiment": "ExitTail"}, "figure": "exit"}, "plotdata:ExitTail"),
        ({}, "?"),
    ],
)
def test_recent_run_labels(isolated_settings, tmp_path, config, label):
    run = RecentRun.load(_run_dir(tmp_path, "run", config))
    assert run.label == label
    assert label in run.describe()
