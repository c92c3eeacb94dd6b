"""scene 패키지 테스트 (모델, 표면 분할, 파서, 내장 시나리오)."""
import json
import math
from dataclasses import replace

import numpy as np
import pytest

from errors import ScenarioParseError, ScenarioValidationError, UnknownScenarioError
from scene import (
    ReferenceLink,
    Room,
    ScenarioParser,
    Wavelength,
    branch_normal,
    builtin_scenario,
    canonical_json,
    discretize,
    load_scenario,
    mesh_surfaces,
    reference_assignment,
    scenario_hash,
    scenario_to_dict,
    truncate_users,
)
from scene.geometry import SURFACE_NAMES


# ==================== branch_normal ====================

class TestBranchNormal:
    def test_zenith(self):
        n = branch_normal(0.0, 90.0)
        assert n.as_tuple() == pytest.approx((0.0, 0.0, 1.0), abs=1e-12)

    @pytest.mark.parametrize("az, expected", [
        (180.0, (-0.5, 0.0, 0.8660254037844386)),
        (90.0, (0.0, 0.5, 0.8660254037844386)),
    ])
    def test_elevation_60(self, az, expected):
        assert branch_normal(az, 60.0).as_tuple() == pytest.approx(expected, abs=1e-12)

    def test_unit_length_and_zenith_independent_of_azimuth(self):
        rng = np.random.default_rng(3)
        for az, el in zip(rng.uniform(0, 360, 200), rng.uniform(1e-3, 90, 200)):
            assert branch_normal(az, el).norm() == pytest.approx(1.0, abs=1e-12)
        top = [branch_normal(az, 90.0).as_array() for az in (0.0, 37.0, 180.0, 359.0)]
        for n in top:
            np.testing.assert_allclose(n, top[0], atol=1e-12)


# ==================== discretize ====================

class TestDiscretize:
    def test_reference_room_at_20cm(self):
        elements = discretize(Room(), 0.20)
        assert len(elements) == 3400
        assert sum(e.area for e in elements) == pytest.approx(136.0, rel=1e-3)

    def test_floor_reflectance(self):
        floor = [e for e in discretize(Room(), 0.5) if e.center.z == 0.0]
        assert floor
        assert all(e.reflectance == 0.3 for e in floor)
        others = [e for e in discretize(Room(), 0.5) if e.center.z != 0.0]
        assert all(e.reflectance == 0.8 for e in others)

    def test_one_element_per_face(self):
        room = Room(width_x=2.0, length_y=2.0, height_z=2.0, cf_height=1.0)
        elements = discretize(room, 2.0)
        assert len(elements) == 6
        normals = sorted(e.normal.as_tuple() for e in elements)
        assert normals == sorted([
            (0.0, 0.0, 1.0), (0.0, 0.0, -1.0), (1.0, 0.0, 0.0),
            (-1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, -1.0, 0.0),
        ])

    def test_normals_point_inward(self):
        room = Room()
        mesh = mesh_surfaces(room, 0.3)
        to_center = room.center[None, :] - mesh.centers
        assert np.all(np.einsum("ij,ij->i", mesh.normals, to_center) > 0)

    @pytest.mark.parametrize("size", [0.05, 0.3, 0.7])
    def test_per_surface_area_is_exhaustive(self, size):
        room = Room()
        mesh = mesh_surfaces(room, size)
        w, l, h = room.dimensions
        expected = {
            "floor": w * l, "ceiling": w * l,
            "wall_x0": l * h, "wall_xw": l * h,
            "wall_y0": w * h, "wall_yl": w * h,
        }
        for name in SURFACE_NAMES:
            assert mesh.surface_area(name) == pytest.approx(expected[name], rel=1e-3)

    def test_non_dividing_size_rounds_tile_count(self):
        # 3 m 높이를 0.8 m 로 나누면 round(3.75) = 4 개, 실제 한 변 0.75 m
        mesh = mesh_surfaces(Room(), 0.8)
        wall = mesh.areas[mesh.surface == SURFACE_NAMES.index("wall_x0")]
        assert len(wall) == 10 * 4
        assert wall[0] == pytest.approx(0.8 * 0.75)
        assert mesh.surface_area("wall_x0") == pytest.approx(24.0)

    def test_mesh_is_read_only(self):
        mesh = mesh_surfaces(Room(), 1.0)
        with pytest.raises(ValueError):
            mesh.areas[0] = 0.0

    def test_rejects_non_positive_size(self):
        with pytest.raises(ValueError):
            mesh_surfaces(Room(), 0.0)


# ==================== 내장 시나리오 ====================

class TestBuiltin:
    def test_conference_table_first_user(self):
        s = builtin_scenario("conference_table")
        assert len(s.users) == 10
        assert s.users[0].position.as_tuple() == (1.5, 2.5, 1.0)
        assert s.noise.receiver_bandwidth == 5e9
        assert len(s.units) == 8

    def test_cocktail2(self):
        s = builtin_scenario("cocktail2")
        assert s.users[9].position.as_tuple() == (2.25, 4.0, 1.0)
        assert s.noise.receiver_bandwidth == 2.5e9
        assert s.rate_for(1) == 3.2e9
        assert s.rate_for(2) == s.configured_rate_bps

    def test_unknown_name(self):
        with pytest.raises(UnknownScenarioError, match="banquet"):
            builtin_scenario("banquet")

    def test_reference_assignment(self):
        rows = reference_assignment("conference_table")
        assert len(rows) == 10
        assert rows[0] == ReferenceLink(user_id=1, ap_id=1, branch=4, wavelength=Wavelength.RED)

    @pytest.mark.parametrize("name", ["conference_table", "cocktail1", "cocktail2"])
    def test_round_trip_is_bit_identical(self, name):
        s = builtin_scenario(name)
        parsed = ScenarioParser().parse_dict(json.loads(json.dumps(scenario_to_dict(s))))
        assert parsed == s
        assert canonical_json(parsed) == canonical_json(s)

    def test_truncate_drops_overrides_of_removed_users(self):
        s = truncate_users(builtin_scenario("cocktail1"), 3)
        assert s.user_ids == (1, 2, 3)
        assert s.rate_overrides_bps == ()
        with pytest.raises(ValueError):
            truncate_users(s, 0)


# ==================== 시나리오 파일 ====================

def _write(tmp_path, data, encoding="utf-8"):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(data, ensure_ascii=False), encoding=encoding)
    return path


class TestLoadScenario:
    def test_minimal_file_gets_defaults(self, tmp_path):
        s = load_scenario(_write(tmp_path, {"name": "mini", "users": [{"id": 1, "pos": [2.0, 4.0, 1.0]}]}))
        assert len(s.units) == 8
        assert s.room.rho_walls_ceiling == 0.8
        assert s.room.rho_floor == 0.3
        assert all(b.fov_half_angle_deg == 25.0 for b in s.users[0].branches)
        assert s.noise.noise_density == pytest.approx(4.47e-12)

    def test_two_component_position_uses_communication_floor(self, tmp_path):
        s = load_scenario(_write(tmp_path, {"name": "mini", "users": [{"id": 1, "pos": [2.0, 4.0]}]}))
        assert s.users[0].position.z == 1.0

    def test_position_outside_room(self, tmp_path):
        path = _write(tmp_path, {"name": "bad", "users": [{"id": 1, "pos": [9, 1, 1]}]})
        with pytest.raises(ScenarioValidationError) as exc:
            load_scenario(path)
        assert any("position outside room" in v and v.startswith("users[0].pos") for v in exc.value.violations)

    def test_element_size_must_tile_every_side(self, tmp_path):
        data = {"name": "bad", "room": {"elem1": 0.07, "elem2": 0.8}, "users": [{"id": 1, "pos": [2.0, 4.0]}]}
        with pytest.raises(ScenarioValidationError) as exc:
            load_scenario(_write(tmp_path, data))
        joined = "\n".join(exc.value.violations)
        assert "room.elem_size_bounce1: 0.07 m elements do not divide width_x = 4.0 m" in joined
        assert "room.elem_size_bounce2: 0.8 m elements do not divide height_z = 3.0 m" in joined
        assert "room.elem_size_bounce2: 0.8 m elements do not divide length_y" not in joined

    def test_dividing_element_sizes_accepted(self, tmp_path):
        data = {"name": "ok", "room": {"elem1": 0.1, "elem2": 0.5}, "users": [{"id": 1, "pos": [2.0, 4.0]}]}
        s = load_scenario(_write(tmp_path, data))
        assert (s.room.elem_size_bounce1, s.room.elem_size_bounce2) == (0.1, 0.5)

    def test_three_branches(self, tmp_path):
        data = {
            "name": "bad",
            "users": [{"id": 1, "pos": [2, 4, 1]}],
            "receiver": {"branches": [{"az": 0}, {"az": 90}, {"az": 180}]},
        }
        with pytest.raises(ScenarioValidationError) as exc:
            load_scenario(_write(tmp_path, data))
        assert any("expected 4 branches" in v for v in exc.value.violations)

    def test_collects_every_violation(self, tmp_path):
        data = {
            "name": "bad",
            "room": {"rho_floor": 1.5},
            "users": [{"id": 1, "pos": [9, 1, 1]}, {"id": 1, "pos": [1, 1, 1]}],
            "rate_bps": "fast",
        }
        with pytest.raises(ScenarioValidationError) as exc:
            load_scenario(_write(tmp_path, data))
        joined = "\n".join(exc.value.violations)
        assert "room.rho_floor" in joined
        assert "users: user ids must be unique" in joined
        assert "rate_bps: expected a number" in joined

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ScenarioParseError):
            load_scenario(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioParseError):
            load_scenario(tmp_path / "nope.json")

    def test_cp949_file(self, tmp_path):
        path = _write(tmp_path, {"name": "회의실", "users": [{"id": 1, "pos": [2, 4, 1]}]}, encoding="cp949")
        assert load_scenario(path).name == "회의실"

    def test_overrides_and_objective_alias(self, tmp_path):
        data = {
            "name": "mini",
            "users": [{"id": 1, "pos": [2, 4, 1]}, {"id": 2, "pos": [2, 5, 1]}],
            "rate_overrides_bps": {"1": 3.2e9},
            "solver": {"objective": "linear"},
        }
        s = load_scenario(_write(tmp_path, data))
        assert s.rate_for(1) == 3.2e9
        assert s.rate_for(2) == 7.1e9
        assert s.solver.objective == "linear_sum"

    def test_unknown_override_user(self, tmp_path):
        data = {"name": "mini", "users": [{"id": 1, "pos": [2, 4, 1]}], "rate_overrides_bps": {"7": 1e9}}
        with pytest.raises(ScenarioValidationError, match="rate_overrides_bps.7"):
            load_scenario(_write(tmp_path, data))


class TestScenarioHash:
    def test_changes_with_any_field(self):
        s = builtin_scenario("conference_table")
        changed = replace(s, room=replace(s.room, rho_floor=0.31))
        assert scenario_hash(s) != scenario_hash(changed)
        assert scenario_hash(s) == scenario_hash(builtin_scenario("conference_table"))

    def test_area_converted_from_mm2(self):
        s = builtin_scenario("cocktail1")
        assert s.users[0].branches[0].detector_area == pytest.approx(2e-5)
        assert scenario_to_dict(s)["receiver"]["branches"][0]["area_mm2"] == 20.0
        assert math.isclose(s.room.diagonal, math.sqrt(16 + 64 + 9))
