from __future__ import annotations

import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import H, S, simple_scenario
from impedance_swarm.scene import (
    Arena,
    DescriptionParseError,
    Gate,
    ObstacleEntry,
    ObstacleKind,
    SceneDescription,
    ScenarioError,
    Spacing,
    SpacingNotApplicable,
    Waypoint,
    classify_spacing,
    interpolate,
    load_scenario,
    parse_description,
    render_description,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
)


# -- spacing ------------------------------------------------------------------


def test_spacing_wide_when_beyond_threshold():
    assert classify_spacing([(10, 10), (35, 10)]) is Spacing.WIDELY


def test_spacing_boundary_is_close():
    assert classify_spacing([(10, 10), (30, 10)]) is Spacing.CLOSELY


def test_spacing_uses_closest_pair():
    assert classify_spacing([(0, 0), (3, 4)]) is Spacing.CLOSELY
    assert classify_spacing([(0, 0), (90, 0), (0, 5)]) is Spacing.CLOSELY


def test_spacing_needs_two_positions():
    with pytest.raises(SpacingNotApplicable):
        classify_spacing([(1, 1)])
    with pytest.raises(ValueError):
        classify_spacing([(0, 0), (50, 0)], threshold=0)


cells = st.lists(st.tuples(st.integers(0, 99), st.integers(0, 99)), min_size=2, max_size=6)


@given(cells, st.randoms(use_true_random=False))
def test_spacing_permutation_invariant(pts, rnd):
    shuffled = list(pts)
    rnd.shuffle(shuffled)
    assert classify_spacing(pts) is classify_spacing(shuffled)


@given(cells, st.floats(1.0, 5.0))
def test_spacing_scaling_never_narrows(pts, lam):
    if classify_spacing(pts) is Spacing.WIDELY:
        assert classify_spacing([(lam * x, lam * y) for x, y in pts]) is Spacing.WIDELY


# -- descriptions -------------------------------------------------------------


def test_render_two_stands():
    d = SceneDescription(2, 1, 1, (ObstacleEntry(H, (10, 50)), ObstacleEntry(H, (80, 50))), Spacing.WIDELY)
    assert render_description(d).split("\n")[0] == "2 cylindrical stands; 1 before the gate; 1 after the gate; widely spaced"


def test_render_empty_mentions_no_obstacles_before_gate():
    text = render_description(SceneDescription(0, 0, 0, (), None))
    assert "no obstacles before the gate" in text
    assert parse_description(text) == SceneDescription(0, 0, 0, (), None)


def test_render_mixed_orders_humans_first():
    d = SceneDescription(
        3, 3, 0, (ObstacleEntry(H, (10, 10)), ObstacleEntry(S, (40, 10)), ObstacleEntry(H, (70, 10))), Spacing.WIDELY
    )
    assert render_description(d).startswith("1 human and 2 cylindrical stands; 3 before the gate")


@st.composite
def descriptions(draw):
    kinds = draw(st.lists(st.sampled_from([H, S]), max_size=6))
    entries = tuple(ObstacleEntry(k, (draw(st.integers(0, 99)), draw(st.integers(0, 99)))) for k in kinds)
    before = draw(st.integers(0, len(entries)))
    spacing = classify_spacing([e.cell for e in entries]) if len(entries) >= 2 else None
    return SceneDescription(len(entries), before, len(entries) - before, entries, spacing)


@given(descriptions())
def test_render_parse_round_trip(d):
    assert parse_description(render_description(d)) == d


def test_parse_round_trip_on_bundled(scenarios):
    from impedance_swarm.perception import analyze_ground_truth

    for s in scenarios:
        d = analyze_ground_truth(s)
        assert parse_description(render_description(d)) == d


def test_parse_empty_fails():
    with pytest.raises(DescriptionParseError) as e:
        parse_description("")
    assert e.value.line == 1


def test_parse_unknown_word_names_token():
    with pytest.raises(DescriptionParseError) as e:
        parse_description("2 boxes; 2 before the gate; 0 after the gate; closely spaced")
    assert e.value.token == "boxes"
    assert "boxes" in str(e.value)


def test_parse_bad_entry_reports_line():
    text = "1 human; 1 before the gate; 0 after the gate\nrobot at (3, 4)"
    with pytest.raises(DescriptionParseError) as e:
        parse_description(text)
    assert e.value.line == 2


def test_parse_count_mismatch():
    with pytest.raises(DescriptionParseError):
        parse_description("2 humans; 2 before the gate; 0 after the gate; closely spaced\nhuman at (3, 4)")


def test_description_invariants():
    with pytest.raises(ValueError):
        SceneDescription(2, 1, 0, (ObstacleEntry(H, (0, 0)), ObstacleEntry(H, (1, 1))), Spacing.CLOSELY)
    with pytest.raises(ValueError):
        SceneDescription(1, 1, 0, (ObstacleEntry(H, (0, 0)),), Spacing.CLOSELY)


# -- geometry -----------------------------------------------------------------


@given(st.floats(0, 2), st.floats(0, 2))
def test_grid_round_trip_within_half_diagonal(x, y):
    a = Arena(2.0, 2.0, 100)
    cx, cy = a.cell_center(a.to_cell((x, y)))
    assert math.hypot(cx - x, cy - y) <= 0.5 * math.hypot(0.02, 0.02) + 1e-12


def test_gate_partition_and_walls():
    g = Gate((2.0, 1.0), 0.8, 0.0)
    assert g.is_before((1.0, 1.0)) and not g.is_before((3.0, 1.0))
    (a1, b1), (a2, b2) = g.walls()
    assert a1 == pytest.approx((2.0, 1.4)) and a2 == pytest.approx((2.0, 0.6))
    assert b1[1] > a1[1] and b2[1] < a2[1]


def test_interpolate_holds_ends():
    path = (Waypoint(0.0, (0.0, 0.0)), Waypoint(2.0, (2.0, 0.0)))
    assert interpolate(path, -1) == (0.0, 0.0)
    assert interpolate(path, 1.0) == pytest.approx((1.0, 0.0))
    assert interpolate(path, 5.0) == (2.0, 0.0)


def test_dominant_kind_soft_if_any_human():
    s = simple_scenario([(H, (1.5, 0.3), 0.1), (S, (2.0, 1.7), 0.2)])
    assert s.dominant_kind is ObstacleKind.SOFT
    assert simple_scenario([(H, (1.5, 0.3), 0.1)]).dominant_kind is ObstacleKind.HARD


# -- files --------------------------------------------------------------------


def test_round_trip_bundled_file(tmp_path, experiments):
    s = experiments[0]
    out = tmp_path / "s.json"
    save_scenario(s, out)
    assert load_scenario(out) == s


def _raw(**overrides):
    d = scenario_to_dict(simple_scenario([(H, (1.5, 0.3), 0.1)]))
    d.update(overrides)
    return d


def test_three_followers_rejected():
    with pytest.raises(ScenarioError) as e:
        scenario_from_dict(_raw(follower_starts=[[0.3, 1.3], [0.3, 0.7], [0.1, 1.0]]))
    assert e.value.field == "follower_starts"


def test_out_of_bounds_obstacle_rejected():
    d = scenario_to_dict(simple_scenario([(H, (1.5, 0.3), 0.1)], arena=Arena(2.0, 2.0), goal=(1.8, 1.0)))
    d["obstacles"][0]["pos"] = [5.0, 5.0]
    with pytest.raises(ScenarioError) as e:
        scenario_from_dict(d)
    assert e.value.field == "obstacles[0].pos"


def test_bad_enum_and_missing_field_and_unknown_key():
    d = _raw()
    d["obstacles"][0]["kind"] = "squishy"
    with pytest.raises(ScenarioError, match="kind"):
        scenario_from_dict(d)
    d = _raw()
    del d["goal"]
    with pytest.raises(ScenarioError, match="goal"):
        scenario_from_dict(d)
    with pytest.raises(ScenarioError, match="colour"):
        scenario_from_dict(_raw(colour="red"))


def test_non_increasing_times_rejected():
    d = _raw(goal=[{"t": 0.0, "pos": [3, 1]}, {"t": 0.0, "pos": [3, 1.2]}])
    with pytest.raises(ScenarioError, match="strictly increasing"):
        scenario_from_dict(d)


def test_starts_too_close_rejected():
    with pytest.raises(ScenarioError):
        scenario_from_dict(_raw(leader_start=[0.36, 1.25]))


def test_narrow_gate_rejected():
    d = _raw(gate={"center": [2.0, 1.0], "width": 0.1, "theta": 0.0})
    with pytest.raises(ScenarioError) as e:
        scenario_from_dict(d)
    assert e.value.field == "gate.width"


def test_bundled_files_are_canonical_json(scenario_dir):
    files = sorted(scenario_dir.glob("*.json"))
    assert len(files) == 40
    for f in files:
        assert json.loads(f.read_text()) == scenario_to_dict(load_scenario(f))
