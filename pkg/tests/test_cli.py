import pytest
from typer.testing import CliRunner

from cli import app
from storage.files import atomic_write_text, read_split

runner = CliRunner()


def invoke(*args: str):
    return runner.invoke(app, ["--no-progress", *args])


def test_every_command_goes_through_the_middlewares():
    for group in app.registered_groups:
        for command in group.typer_instance.registered_commands:
            assert getattr(command.callback, "__wrapped_by_middleware__", False), command.name


def test_help_lists_groups():
    result = invoke("--help")
    assert result.exit_code == 0
    for name in ("dataset", "pairs", "morph", "vuln", "mad", "report", "experiment"):
        assert name in result.output


def test_unknown_flag_is_a_usage_error():
    assert invoke("dataset", "split", "--bogus").exit_code == 2


def test_malformed_manifest_exits_one(tmp_path):
    manifest = atomic_write_text(tmp_path / "manifest.txt", "S1;F;1;20;a.png\n")
    result = invoke("dataset", "split", "--manifest", str(manifest), "--out", str(tmp_path / "split.txt"))
    assert result.exit_code == 1
    assert not (tmp_path / "split.txt").exists()


def test_missing_config_exits_one(tmp_path):
    result = invoke("experiment", "run", "--config", str(tmp_path / "nope.ini"))
    assert result.exit_code == 1


def test_split_command(manifest_factory, tmp_path):
    manifest = manifest_factory({f"S{i}": "F" if i % 2 else "M" for i in range(8)}, sessions=(1,))
    out = tmp_path / "split.txt"
    result = invoke("dataset", "split", "--manifest", str(manifest), "--out", str(out), "--seed", "5",
                    "--ratios", "0.5,0.25,0.25")
    assert result.exit_code == 0, result.output
    split = read_split(out)
    assert split.sizes == (4, 2, 2)
    assert split.seed == 5


def test_bad_split_sizes_exit_one(manifest_factory, tmp_path):
    manifest = manifest_factory({"A": "F", "B": "M", "C": "F"}, sessions=(1,))
    result = invoke("dataset", "split", "--manifest", str(manifest), "--out", str(tmp_path / "s.txt"),
                    "--sizes", "1,1,5")
    assert result.exit_code == 1


@pytest.mark.parametrize("cross", [0, 3])
def test_synth_command(tmp_path, cross):
    out = tmp_path / "synth"
    result = invoke("dataset", "synth", "--out", str(out), "--subjects", "3", "--size", "64",
                    "--cross-subjects", str(cross))
    assert result.exit_code == 0, result.output
    assert (out / "manifest.txt").is_file()
    assert (out / "experiment.ini").is_file()
    assert (out / "cross" / "manifest.txt").is_file() == bool(cross)
