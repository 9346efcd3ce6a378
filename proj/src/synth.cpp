#include "driftcast/synth.hpp"

#include "driftcast/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace driftcast {

double DriftEvent::contribution(Timestamp t) const noexcept {
	if (t < at) {
		return 0.0;
	}
	if (kind == Kind::Sudden || duration_hours == 0) {
		return magnitude;
	}
	const double elapsed = static_cast<double>(t - at) / static_cast<double>(kSecondsPerHour);
	return magnitude * std::min(1.0, elapsed / static_cast<double>(duration_hours));
}

std::vector<DriftEvent> SynthConfig::default_events() {
	return {DriftEvent::gradual(make_timestamp(2021, 1, 1), 1.0, 180 * 24),
	        DriftEvent::sudden(make_timestamp(2023, 2, 1), 2.0)};
}

void SynthConfig::validate() const {
	if (end <= start) {
		throw Error(Errc::InvalidRange, "end must be after start");
	}
	if ((end - start) % kSecondsPerHour != 0) {
		throw Error(Errc::InvalidRange, "start and end must be a whole number of hours apart");
	}
	if (!(noise_std >= 0.0)) {
		throw Error(Errc::InvalidArgument, "noise_std must be non-negative");
	}
	for (const auto& e : events) {
		if (e.at < start || e.at > end) {
			throw Error(Errc::InvalidRange, "event at " + format_timestamp(e.at) + " lies outside the series");
		}
		if (e.kind == DriftEvent::Kind::Gradual && e.duration_hours < 1) {
			throw Error(Errc::InvalidArgument, "gradual drift needs a duration of at least one hour");
		}
	}
	if (column.empty()) {
		throw Error(Errc::InvalidArgument, "column name is empty");
	}
}

TimeSeriesFrame generate(const SynthConfig& config) {
	config.validate();
	constexpr double two_pi = 2.0 * std::numbers::pi;
	const std::size_t n = static_cast<std::size_t>((config.end - config.start) / kSecondsPerHour) + 1;
	std::vector<Timestamp> ts(n);
	std::vector<double> values(n);
	std::mt19937_64 rng(config.seed);
	std::normal_distribution<double> noise(0.0, 1.0);
	for (std::size_t i = 0; i < n; ++i) {
		const Timestamp t = config.start + static_cast<Timestamp>(i) * kSecondsPerHour;
		ts[i] = t;
		const double hour_of_week = day_of_week(t) * 24.0 + hour_of_day(t);
		double v = config.base_level + config.daily_amplitude * std::sin(two_pi * hour_of_day(t) / 24.0) +
		           config.weekly_amplitude * std::sin(two_pi * hour_of_week / 168.0);
		for (const auto& e : config.events) {
			v += e.contribution(t);
		}
		v += config.noise_std * noise(rng);
		values[i] = v;
	}
	return TimeSeriesFrame(std::move(ts), {{config.column, std::move(values)}});
}

nlohmann::json synth_sidecar(const SynthConfig& config) {
	nlohmann::json events = nlohmann::json::array();
	for (const auto& e : config.events) {
		nlohmann::json j{{"kind", e.kind == DriftEvent::Kind::Sudden ? "sudden" : "gradual"},
		                 {"at", format_timestamp(e.at)},
		                 {"index", (e.at - config.start) / kSecondsPerHour},
		                 {"magnitude", e.magnitude}};
		if (e.kind == DriftEvent::Kind::Gradual) {
			j["duration_hours"] = e.duration_hours;
		}
		events.push_back(std::move(j));
	}
	return {{"start", format_timestamp(config.start)},
	        {"end", format_timestamp(config.end)},
	        {"rows", (config.end - config.start) / kSecondsPerHour + 1},
	        {"base_level", config.base_level},
	        {"daily_amplitude", config.daily_amplitude},
	        {"weekly_amplitude", config.weekly_amplitude},
	        {"noise_std", config.noise_std},
	        {"seed", config.seed},
	        {"column", config.column},
	        {"events", events}};
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
	SynthConfig c;
	if (j.contains("start")) c.start = parse_timestamp(j.at("start").get<std::string>());
	if (j.contains("end")) c.end = parse_timestamp(j.at("end").get<std::string>());
	if (j.contains("base_level")) c.base_level = j.at("base_level").get<double>();
	if (j.contains("daily_amplitude")) c.daily_amplitude = j.at("daily_amplitude").get<double>();
	if (j.contains("weekly_amplitude")) c.weekly_amplitude = j.at("weekly_amplitude").get<double>();
	if (j.contains("noise_std")) c.noise_std = j.at("noise_std").get<double>();
	if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
	if (j.contains("column")) c.column = j.at("column").get<std::string>();
	if (j.contains("events")) {
		c.events.clear();
		for (const auto& e : j.at("events")) {
			const auto kind = e.at("kind").get<std::string>();
			const auto at = parse_timestamp(e.at("at").get<std::string>());
			const double mag = e.at("magnitude").get<double>();
			if (kind == "sudden") {
				c.events.push_back(DriftEvent::sudden(at, mag));
			} else if (kind == "gradual") {
				c.events.push_back(DriftEvent::gradual(at, mag, e.at("duration_hours").get<std::size_t>()));
			} else {
				throw Error(Errc::InvalidArgument, "unknown event kind '" + kind + "'");
			}
		}
	}
	return c;
}

} // namespace driftcast
