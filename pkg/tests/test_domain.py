"""Station description: grids, tariffs, fleets, scenarios, CSV ingestion."""

import numpy as np
import pytest

from coldcharge.domain import (
    BASE_BETA_CHG,
    BASE_BETA_HEAT,
    BASE_CAPACITY_KWH,
    BASE_MASS_KG,
    BASE_P_TOTAL_KW,
    BASE_PC_KW,
    BASE_PH_KW,
    ScenarioSet,
    StationModel,
    Tariff,
    ThermalParams,
    TimeGrid,
    TimeSeriesError,
    VehicleSpec,
    average_profiles,
    build_tou_tariff,
    gen_fleet,
    gen_scenarios,
    load_timeseries,
    model_from_dict,
    model_to_dict,
    scale_solar_to_fleet,
    synth_solar_profile,
    synth_temp_profile,
)


def make_vehicle(**kw):
    base = dict(id=0, capacity_kwh=37.0, mass_kg=235.88, p_total_max=7.4,
                pc_bar=4.8, beta_chg=0.12, ph_bar=3.0, beta_heat=0.024,
                soc_arr=0.2, soc_dep_req=0.9, temp_arr=2.0, ta=0, td=16)
    base.update(kw)
    return VehicleSpec(**base)


class TestTimeGrid:
    def test_defaults_cover_seven_to_twentytwo(self):
        g = TimeGrid()
        assert g.start_hour == 7.0
        assert g.n_steps == 60
        assert g.end_hour == pytest.approx(22.0)

    def test_hours_vector(self):
        g = TimeGrid(start_hour=6.0, n_steps=4, dt=0.5)
        assert np.allclose(g.hours(), [6.0, 6.5, 7.0, 7.5])

    def test_step_of_hour(self):
        g = TimeGrid()
        assert g.step_of_hour(7.0) == 0
        assert g.step_of_hour(7.24) == 0
        assert g.step_of_hour(7.25) == 1
        assert g.step_of_hour(21.99) == 59

    @pytest.mark.parametrize("kw", [
        dict(n_steps=0), dict(dt=0.0), dict(dt=-1.0),
        dict(start_hour=-1.0), dict(start_hour=24.0),
        dict(start_hour=20.0, n_steps=60, dt=0.25),
    ])
    def test_rejects_bad_grids(self, kw):
        with pytest.raises(ValueError):
            TimeGrid(**kw)

    def test_step_of_hour_outside_horizon(self):
        with pytest.raises(ValueError):
            TimeGrid().step_of_hour(23.0)


class TestTariff:
    def test_tou_band_boundaries(self):
        g = TimeGrid()
        price = build_tou_tariff(g).price
        at = {h: price[g.step_of_hour(h)] for h in
              (7.0, 7.75, 8.0, 11.75, 12.0, 17.75, 18.0, 21.75)}
        assert at[7.0] == at[7.75] == pytest.approx(12.48)
        assert at[8.0] == at[11.75] == pytest.approx(17.22)
        assert at[12.0] == at[17.75] == pytest.approx(22.09)
        assert at[18.0] == at[21.75] == pytest.approx(12.48)

    def test_rejects_nonpositive_prices(self):
        with pytest.raises(ValueError):
            Tariff(price=np.array([12.0, 0.0]))
        with pytest.raises(ValueError):
            Tariff(price=np.array([[12.0]]))


class TestVehicleSpec:
    def test_window(self):
        v = make_vehicle(ta=4, td=20)
        assert v.n_window == 16
        assert list(v.window()) == list(range(4, 20))

    @pytest.mark.parametrize("kw", [
        dict(capacity_kwh=0.0), dict(mass_kg=-1.0), dict(p_total_max=0.0),
        dict(pc_bar=0.0), dict(ph_bar=0.0), dict(beta_chg=-0.1),
        dict(soc_arr=1.5), dict(soc_dep_req=-0.1), dict(ta=5, td=5),
        dict(ta=-1, td=4),
    ])
    def test_rejects_bad_vehicles(self, kw):
        with pytest.raises(ValueError):
            make_vehicle(**kw)


class TestThermalParams:
    def test_lumped_heat_capacity(self):
        th = ThermalParams()
        v = make_vehicle()
        assert th.mc(v) == pytest.approx(235.88 * 2.82e-4)

    @pytest.mark.parametrize("kw", [
        dict(eta_chg=0.0), dict(eta_chg=1.2), dict(eta_heat=0.0),
        dict(mu_chg=0.0), dict(mu_heat=-1.0),
        dict(T_lo=20.0), dict(T_set=40.0),
        dict(heat_capacity_c=0.0), dict(loss_coeff_hA=0.0),
    ])
    def test_rejects_bad_params(self, kw):
        with pytest.raises(ValueError):
            ThermalParams(**kw)


class TestStationModel:
    def make(self, **kw):
        g = TimeGrid()
        base = dict(grid=g, tariff=build_tou_tariff(g),
                    thermal=ThermalParams(),
                    fleet=[make_vehicle(id=0), make_vehicle(id=1, ta=8, td=40)],
                    pg_max=11.0)
        base.update(kw)
        return StationModel(**base)

    def test_accepts_and_exposes(self):
        m = self.make()
        assert m.n_vehicles == 2
        assert m.connected_capacity() == pytest.approx(14.8)
        assert m.vehicle(1).ta == 8
        with pytest.raises(KeyError):
            m.vehicle(7)

    def test_rejects_duplicate_ids(self):
        with pytest.raises(ValueError, match="unique"):
            self.make(fleet=[make_vehicle(id=0), make_vehicle(id=0)])

    def test_rejects_window_past_horizon(self):
        with pytest.raises(ValueError, match="past the horizon"):
            self.make(fleet=[make_vehicle(td=61)])

    def test_rejects_hot_arrival(self):
        with pytest.raises(ValueError, match="arrival temperature"):
            self.make(fleet=[make_vehicle(temp_arr=36.0)])

    def test_rejects_small_guard_constant(self):
        with pytest.raises(ValueError, match="big_M"):
            self.make(big_M=5.0)

    def test_roundtrip_through_dict(self):
        m = self.make()
        m2 = model_from_dict(model_to_dict(m))
        assert m2.grid == m.grid
        assert np.allclose(m2.tariff.price, m.tariff.price)
        assert m2.thermal == m.thermal
        assert m2.fleet == m.fleet
        assert m2.pg_max == m.pg_max


class TestGenFleet:
    def test_deterministic_per_seed(self):
        a = gen_fleet(5, seed=42)
        b = gen_fleet(5, seed=42)
        c = gen_fleet(5, seed=43)
        assert a == b
        assert a != c

    def test_parameters_stay_near_nominal(self):
        fleet = gen_fleet(40, seed=1)
        for v in fleet:
            assert 0.95 * BASE_CAPACITY_KWH <= v.capacity_kwh <= 1.05 * BASE_CAPACITY_KWH
            assert 0.95 * BASE_MASS_KG <= v.mass_kg <= 1.05 * BASE_MASS_KG
            assert 0.95 * BASE_P_TOTAL_KW <= v.p_total_max <= 1.05 * BASE_P_TOTAL_KW
            assert 0.95 * BASE_PC_KW <= v.pc_bar <= 1.05 * BASE_PC_KW
            assert 0.95 * BASE_BETA_CHG <= v.beta_chg <= 1.05 * BASE_BETA_CHG
            assert 0.95 * BASE_PH_KW <= v.ph_bar <= 1.05 * BASE_PH_KW
            assert 0.95 * BASE_BETA_HEAT <= v.beta_heat <= 1.05 * BASE_BETA_HEAT
            assert 0.0 <= v.soc_arr <= 0.4
            assert -2.0 <= v.temp_arr <= 8.0
            assert v.soc_dep_req == 0.9

    def test_windows_fit_grid_with_min_parking(self):
        grid = TimeGrid()
        for v in gen_fleet(40, seed=2, grid=grid):
            assert 0 <= v.ta < v.td <= grid.n_steps
            assert v.n_window >= 16

    def test_ids_are_sequential(self):
        assert [v.id for v in gen_fleet(4, seed=0)] == [0, 1, 2, 3]

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            gen_fleet(0, seed=1)


class TestGenScenarios:
    def setup_method(self):
        self.grid = TimeGrid()
        self.solar = synth_solar_profile(self.grid, peak_kw=5.0)
        self.temp = synth_temp_profile(self.grid)

    def test_shapes_and_weights(self):
        s = gen_scenarios(self.solar, self.temp, n_scen=7, seed=5)
        assert s.n_scen == 7
        assert s.pv_cap.shape == (7, 60)
        assert s.temp_amb.shape == (7, 60)
        assert s.prob.sum() == pytest.approx(1.0)
        assert np.all(s.prob > 0)

    def test_deterministic_per_seed(self):
        a = gen_scenarios(self.solar, self.temp, n_scen=3, seed=9)
        b = gen_scenarios(self.solar, self.temp, n_scen=3, seed=9)
        c = gen_scenarios(self.solar, self.temp, n_scen=3, seed=10)
        assert np.array_equal(a.pv_cap, b.pv_cap)
        assert np.array_equal(a.temp_amb, b.temp_amb)
        assert not np.array_equal(a.pv_cap, c.pv_cap)

    def test_noise_bands(self):
        s = gen_scenarios(self.solar, self.temp, n_scen=20, seed=3)
        base = self.solar[None, :]
        assert np.all(s.pv_cap >= 0.0)
        assert np.all(s.pv_cap <= base * 1.10 + 1e-12)
        pos = base > 0
        assert np.all(s.pv_cap[np.broadcast_to(pos, s.pv_cap.shape)]
                      >= (base * 0.90)[pos].min() - 1e-12)
        spread = s.temp_amb - self.temp[None, :] * 1.0
        # each scenario's deviation is bounded by 15 percent plus 1 degC
        assert np.all(np.abs(s.temp_amb - self.temp[None, :])
                      <= 0.15 * np.abs(self.temp)[None, :] + 1.0 + 1e-9)
        assert spread.shape == s.temp_amb.shape

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            gen_scenarios(self.solar, self.temp[:-1], n_scen=2, seed=0)
        with pytest.raises(ValueError):
            gen_scenarios(-self.solar - 1.0, self.temp, n_scen=2, seed=0)
        with pytest.raises(ValueError):
            gen_scenarios(self.solar, self.temp, n_scen=0, seed=0)


class TestScenarioSet:
    def test_rejects_bad_weights_and_shapes(self):
        ok = dict(prob=np.array([0.5, 0.5]),
                  pv_cap=np.zeros((2, 4)), temp_amb=np.zeros((2, 4)))
        ScenarioSet(**ok)
        with pytest.raises(ValueError):
            ScenarioSet(prob=np.array([0.5, 0.6]), pv_cap=np.zeros((2, 4)),
                        temp_amb=np.zeros((2, 4)))
        with pytest.raises(ValueError):
            ScenarioSet(prob=np.array([0.5, 0.5]), pv_cap=np.zeros((3, 4)),
                        temp_amb=np.zeros((3, 4)))
        with pytest.raises(ValueError):
            ScenarioSet(prob=np.array([0.5, 0.5]), pv_cap=-np.ones((2, 4)),
                        temp_amb=np.zeros((2, 4)))


class TestLoadTimeseries:
    def write(self, tmp_path, rows, header=None):
        path = tmp_path / "series.csv"
        lines = ([header] if header else []) + rows
        path.write_text("\n".join(lines) + "\n")
        return path

    def test_quarter_hour_exact(self, tmp_path):
        g = TimeGrid(start_hour=7.0, n_steps=4, dt=0.25)
        rows = [f"2024-01-15T07:{m:02d}:00,{v}" for m, v in
                ((0, 1.0), (15, 2.0), (30, 3.0), (45, 4.0))]
        path = self.write(tmp_path, rows, header="timestamp,value")
        out = load_timeseries(path, "solar", g)
        assert np.allclose(out, [1.0, 2.0, 3.0, 4.0])

    def test_hourly_forward_fill(self, tmp_path):
        g = TimeGrid(start_hour=7.0, n_steps=8, dt=0.25)
        rows = ["2024-01-15T07:00:00,-4.0", "2024-01-15T08:00:00,-2.0"]
        path = self.write(tmp_path, rows)
        out = load_timeseries(path, "temperature", g)
        assert np.allclose(out, [-4.0] * 4 + [-2.0] * 4)

    def test_step_mean_of_multiple_rows(self, tmp_path):
        g = TimeGrid(start_hour=7.0, n_steps=1, dt=0.25)
        rows = ["2024-01-15T07:00:00,1.0", "2024-01-15T07:10:00,3.0"]
        out = load_timeseries(self.write(tmp_path, rows), "solar", g)
        assert out[0] == pytest.approx(2.0)

    def test_unsorted_rows_are_sorted(self, tmp_path):
        g = TimeGrid(start_hour=7.0, n_steps=2, dt=0.25)
        rows = ["2024-01-15T07:15:00,5.0", "2024-01-15T07:00:00,1.0"]
        out = load_timeseries(self.write(tmp_path, rows), "solar", g)
        assert np.allclose(out, [1.0, 5.0])

    def test_bad_timestamp_reports_row(self, tmp_path):
        g = TimeGrid(start_hour=7.0, n_steps=1, dt=0.25)
        path = self.write(tmp_path, ["2024-01-15T07:00:00,1.0", "oops,2.0"])
        with pytest.raises(TimeSeriesError, match="row 2"):
            load_timeseries(path, "solar", g)

    def test_non_numeric_value_reports_row(self, tmp_path):
        g = TimeGrid(start_hour=7.0, n_steps=1, dt=0.25)
        path = self.write(tmp_path, ["2024-01-15T07:00:00,high"])
        with pytest.raises(TimeSeriesError, match="row 1"):
            load_timeseries(path, "solar", g)

    def test_negative_solar_rejected(self, tmp_path):
        g = TimeGrid(start_hour=7.0, n_steps=1, dt=0.25)
        path = self.write(tmp_path, ["2024-01-15T07:00:00,-1.0"])
        with pytest.raises(TimeSeriesError, match="negative solar"):
            load_timeseries(path, "solar", g)
        # the same value is fine as a temperature
        load_timeseries(path, "temperature", g)

    def test_nonpositive_price_rejected(self, tmp_path):
        g = TimeGrid(start_hour=7.0, n_steps=1, dt=0.25)
        path = self.write(tmp_path, ["2024-01-15T07:00:00,0.0"])
        with pytest.raises(TimeSeriesError, match="price"):
            load_timeseries(path, "price", g)

    def test_missing_start_coverage(self, tmp_path):
        g = TimeGrid(start_hour=7.0, n_steps=4, dt=0.25)
        path = self.write(tmp_path, ["2024-01-15T07:30:00,1.0",
                                     "2024-01-15T08:00:00,1.0"])
        with pytest.raises(TimeSeriesError, match="horizon not covered"):
            load_timeseries(path, "solar", g)

    def test_missing_end_coverage(self, tmp_path):
        g = TimeGrid(start_hour=7.0, n_steps=60, dt=0.25)
        path = self.write(tmp_path, ["2024-01-15T07:00:00,1.0",
                                     "2024-01-15T07:15:00,1.0"])
        with pytest.raises(TimeSeriesError, match="horizon not covered"):
            load_timeseries(path, "solar", g)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(TimeSeriesError, match="no data"):
            load_timeseries(path, "solar", TimeGrid())

    def test_unknown_kind_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="kind"):
            load_timeseries(tmp_path / "x.csv", "wind", TimeGrid())


class TestProfiles:
    def test_solar_bell_is_zero_at_night(self):
        g = TimeGrid()
        out = synth_solar_profile(g, peak_kw=8.0)
        h = g.hours()
        assert np.all(out[h < 7.75] == 0.0)
        assert np.all(out[h > 16.5] == 0.0)
        assert 0.9 * 8.0 <= out.max() <= 8.0
        assert np.all(out >= 0.0)

    def test_temp_profile_shape(self):
        g = TimeGrid()
        out = synth_temp_profile(g, t_min=-3.0, t_max=3.2, peak_hour=14.0)
        h = g.hours()
        assert out[0] == pytest.approx(-3.0)
        assert out.max() == pytest.approx(3.2, abs=0.15)
        peak_at = h[np.argmax(out)]
        assert abs(peak_at - 14.0) <= 0.25
        assert out[-1] < out.max()

    def test_scale_solar_never_up(self):
        fleet = [make_vehicle(id=i) for i in range(2)]   # 14.8 kW connected
        prof = np.array([0.0, 10.0, 20.0])
        out = scale_solar_to_fleet(prof, fleet, frac=0.4)
        assert out.max() == pytest.approx(0.4 * 14.8)
        small = np.array([0.0, 1.0])
        assert np.array_equal(scale_solar_to_fleet(small, fleet), small)

    def test_average_profiles(self):
        a = np.array([1.0, 2.0])
        b = np.array([3.0, 4.0])
        assert np.allclose(average_profiles(a, b), [2.0, 3.0])
        with pytest.raises(ValueError):
            average_profiles(a, np.array([1.0]))
