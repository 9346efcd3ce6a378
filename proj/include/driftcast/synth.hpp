#pragma once

#include "driftcast/frame.hpp"

#include <json.hpp>

#include <cstdint>
#include <vector>

namespace driftcast {

struct DriftEvent {
	enum class Kind { Sudden, Gradual };

	Kind kind = Kind::Sudden;
	Timestamp at = 0;
	/// Jump size for Sudden, total ramp height for Gradual.
	double magnitude = 0.0;
	/// Ramp length in hours; ignored for Sudden.
	std::size_t duration_hours = 0;

	static DriftEvent sudden(Timestamp at, double jump) { return {Kind::Sudden, at, jump, 0}; }
	static DriftEvent gradual(Timestamp at, double total_shift, std::size_t hours) {
		return {Kind::Gradual, at, total_shift, hours};
	}

	/// Additive contribution at time t.
	double contribution(Timestamp t) const noexcept;
};

struct SynthConfig {
	Timestamp start = make_timestamp(2020, 1, 1);
	Timestamp end = make_timestamp(2023, 12, 31, 23);
	double base_level = 2.0;
	double daily_amplitude = 0.3;
	double weekly_amplitude = 0.2;
	double noise_std = 0.15;
	std::vector<DriftEvent> events = default_events();
	std::uint64_t seed = 42;
	std::string column = "interest_rate";

	/// A +1.0 ramp across the first 180 days of 2021 and a +2.0 jump on 2023-02-01.
	static std::vector<DriftEvent> default_events();
	void validate() const;
};

/// Hourly series: level + daily and weekly sinusoids + drift events + Gaussian noise.
TimeSeriesFrame generate(const SynthConfig& config);

/// Full config plus ground-truth event timestamps and row indices.
nlohmann::json synth_sidecar(const SynthConfig& config);
SynthConfig synth_config_from_json(const nlohmann::json& j);

} // namespace driftcast
