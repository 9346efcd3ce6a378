#include "driftcast/changepoint.hpp"

#include "driftcast/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace driftcast {

std::string cost_kind_name(CostKind kind) {
	return kind == CostKind::GaussianNLL ? "GaussianNLL" : "L2Mean";
}

CostKind parse_cost_kind(std::string_view name) {
	if (name == "L2Mean" || name == "l2") {
		return CostKind::L2Mean;
	}
	if (name == "GaussianNLL" || name == "normal") {
		return CostKind::GaussianNLL;
	}
	throw Error(Errc::InvalidArgument, "unknown cost model '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// SegmentCost

SegmentCost::SegmentCost(std::span<const double> values, CostModel model)
	: SegmentCost(std::vector<std::span<const double>>{values}, model) {}

SegmentCost::SegmentCost(const std::vector<std::span<const double>>& columns, CostModel model)
	: model_(model), n_(columns.empty() ? 0 : columns.front().size()) {
	sum_.reserve(columns.size());
	sum_sq_.reserve(columns.size());
	for (const auto& col : columns) {
		if (col.size() != n_) {
			throw Error(Errc::LengthMismatch, "cost columns differ in length");
		}
		// Centring before accumulating keeps S2 - S1^2/len well conditioned.
		double mean = 0.0;
		for (double v : col) {
			if (!std::isfinite(v)) {
				throw Error(Errc::InvalidArgument, "detection input contains a non-finite value");
			}
			mean += v;
		}
		mean = n_ > 0 ? mean / static_cast<double>(n_) : 0.0;
		std::vector<double> s(n_ + 1, 0.0), s2(n_ + 1, 0.0);
		for (std::size_t i = 0; i < n_; ++i) {
			const double x = col[i] - mean;
			s[i + 1] = s[i] + x;
			s2[i + 1] = s2[i] + x * x;
		}
		sum_.push_back(std::move(s));
		sum_sq_.push_back(std::move(s2));
	}
}

double SegmentCost::operator()(std::size_t begin, std::size_t end) const noexcept {
	const double len = static_cast<double>(end - begin);
	double total = 0.0;
	for (std::size_t c = 0; c < sum_.size(); ++c) {
		const double s = sum_[c][end] - sum_[c][begin];
		const double s2 = sum_sq_[c][end] - sum_sq_[c][begin];
		const double sse = std::max(0.0, s2 - s * s / len);
		if (model_.kind == CostKind::L2Mean) {
			total += sse;
		} else {
			total += 0.5 * len * std::log(std::max(sse / len, model_.variance_floor));
		}
	}
	return total;
}

double segment_cost(std::span<const double> values, std::size_t t1, std::size_t t2, const CostModel& model) {
	if (t1 > t2 || t2 >= values.size()) {
		throw Error(Errc::InvalidArgument, "segment bounds out of range");
	}
	if (t2 - t1 + 1 < model.min_points()) {
		throw Error(Errc::SegmentTooShort, "segment of length " + std::to_string(t2 - t1 + 1) + " is too short for " +
		                                       cost_kind_name(model.kind));
	}
	const SegmentCost cost(values.subspan(t1, t2 - t1 + 1), model);
	return cost(0, t2 - t1 + 1);
}

// ---------------------------------------------------------------------------
// dynamic programme shared by PELT and OP

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

struct Table {
	std::vector<double> best;         // F(t)
	std::vector<std::size_t> count;   // changepoints in the optimum for prefix t
	std::vector<std::size_t> prev;    // start of its final segment

	explicit Table(std::size_t n, double beta)
		: best(n + 1, kInf), count(n + 1, 0), prev(n + 1, kNone) {
		best[0] = -beta;
	}

	std::vector<std::size_t> path(std::size_t t) const {
		std::vector<std::size_t> cps;
		while (t > 0) {
			cps.push_back(t);
			t = prev[t];
		}
		std::reverse(cps.begin(), cps.end());
		return cps;
	}
};

struct Candidate {
	std::size_t start = kNone;
	double value = kInf;
	std::size_t changepoints = 0;
};

// Strict total order: lower objective, then fewer changepoints, then the
// lexicographically earlier changepoint list.
bool better(const Candidate& a, const Candidate& b, const Table& table) {
	if (b.start == kNone) {
		return true;
	}
	if (a.value != b.value) {
		return a.value < b.value;
	}
	if (a.changepoints != b.changepoints) {
		return a.changepoints < b.changepoints;
	}
	return table.path(a.start) < table.path(b.start);
}

void validate(const SegmentCost& cost, const PenaltyConfig& penalty, std::size_t min_size) {
	if (!(penalty.beta >= 0.0) || !std::isfinite(penalty.beta)) {
		throw Error(Errc::InvalidArgument, "beta must be finite and non-negative");
	}
	if (min_size < std::max<std::size_t>(1, cost.model().min_points())) {
		throw Error(Errc::InvalidArgument, "min_size " + std::to_string(min_size) + " is below what " +
		                                       cost_kind_name(cost.model().kind) + " can score");
	}
	if (cost.size() < 2 * min_size) {
		throw Error(Errc::SeriesTooShort, "series of length " + std::to_string(cost.size()) +
		                                      " needs at least " + std::to_string(2 * min_size));
	}
}

Segmentation finish(const Table& table, const SegmentCost& cost, const PenaltyConfig& penalty,
                    DetectTrace* trace) {
	const std::size_t n = cost.size();
	Segmentation seg;
	seg.n = n;
	seg.changepoints = table.path(n);
	seg.changepoints.erase(std::remove(seg.changepoints.begin(), seg.changepoints.end(), n), seg.changepoints.end());
	seg.total_cost = table.best[n];
	seg.beta = penalty.beta;
	seg.cost_model = cost.model().kind;
	if (trace != nullptr) {
		trace->back_pointer = table.prev;
	}
	return seg;
}

void settle(Table& table, std::size_t t, const Candidate& c) {
	table.best[t] = c.value;
	table.prev[t] = c.start;
	table.count[t] = c.changepoints;
}

Candidate evaluate(const Table& table, const SegmentCost& cost, double beta, std::size_t start, std::size_t end) {
	return {start, table.best[start] + cost(start, end) + beta, table.count[start] + (start > 0 ? 1 : 0)};
}

} // namespace

Segmentation op_detect(const SegmentCost& cost, const PenaltyConfig& penalty, std::size_t min_size,
                       DetectTrace* trace) {
	validate(cost, penalty, min_size);
	const std::size_t n = cost.size();
	Table table(n, penalty.beta);
	std::size_t evaluations = 0;
	for (std::size_t t = min_size; t <= n; ++t) {
		Candidate best;
		for (std::size_t s = 0; s + min_size <= t; ++s) {
			if (s != 0 && s < min_size) {
				continue;
			}
			const auto c = evaluate(table, cost, penalty.beta, s, t);
			++evaluations;
			if (better(c, best, table)) {
				best = c;
			}
		}
		settle(table, t, best);
	}
	if (trace != nullptr) {
		trace->evaluations = evaluations;
	}
	return finish(table, cost, penalty, trace);
}

Segmentation pelt_detect(const SegmentCost& cost, const PenaltyConfig& penalty, std::size_t min_size,
                         DetectTrace* trace) {
	validate(cost, penalty, min_size);
	const std::size_t n = cost.size();
	Table table(n, penalty.beta);

	struct Entry {
		std::size_t start;
		std::size_t expires; // first time at which the entry is no longer a candidate
	};
	// Ascending by start; the admissible prefix for time t holds starts <= t - min_size.
	std::vector<Entry> candidates{{0, kNone}};
	std::size_t evaluations = 0;

	for (std::size_t t = min_size; t <= n; ++t) {
		if (t >= 2 * min_size) {
			candidates.push_back({t - min_size, kNone});
		}
		std::erase_if(candidates, [t](const Entry& e) { return e.expires <= t; });

		Candidate best;
		for (const auto& e : candidates) {
			if (e.start + min_size > t) {
				break;
			}
			const auto c = evaluate(table, cost, penalty.beta, e.start, t);
			++evaluations;
			if (better(c, best, table)) {
				best = c;
			}
		}
		settle(table, t, best);

		// Pruning with K = 0: a start s with F(s) + C(s, t) > F(t) can never beat
		// a final segment starting at t, which becomes admissible at t + min_size.
		// The relative slack guards the subadditivity argument against rounding.
		for (auto& e : candidates) {
			if (e.start + min_size > t) {
				break;
			}
			if (e.expires != kNone) {
				continue;
			}
			const double via = table.best[e.start] + cost(e.start, t);
			const double slack = 1e-10 * (1.0 + std::abs(via) + std::abs(table.best[t]));
			if (via > table.best[t] + slack) {
				e.expires = t + min_size;
				if (trace != nullptr) {
					trace->pruned.emplace_back(e.start, t);
				}
			}
		}
	}
	if (trace != nullptr) {
		trace->evaluations = evaluations;
	}
	return finish(table, cost, penalty, trace);
}

Segmentation pelt_detect(std::span<const double> values, const CostModel& model, const PenaltyConfig& penalty,
                         std::size_t min_size, DetectTrace* trace) {
	return pelt_detect(SegmentCost(values, model), penalty, min_size, trace);
}

Segmentation op_detect(std::span<const double> values, const CostModel& model, const PenaltyConfig& penalty,
                       std::size_t min_size, DetectTrace* trace) {
	return op_detect(SegmentCost(values, model), penalty, min_size, trace);
}

PenaltyConfig default_penalty(std::span<const double> values) {
	const std::size_t n = values.size();
	if (n < 3) {
		throw Error(Errc::SeriesTooShort, "default penalty needs at least 3 values");
	}
	double ss = 0.0;
	for (std::size_t t = 0; t + 1 < n; ++t) {
		const double d = values[t + 1] - values[t];
		ss += d * d;
	}
	const double variance = ss / static_cast<double>(n - 1) / 2.0;
	return {std::max(2.0 * variance * std::log(static_cast<double>(n)), 1e-12)};
}

Segmentation multivariate_detect(const TimeSeriesFrame& frame, const std::vector<std::string>& columns,
                                 const CostModel& model, const PenaltyConfig& penalty, std::size_t min_size) {
	if (columns.empty()) {
		throw Error(Errc::InvalidArgument, "no detection columns given");
	}
	std::vector<std::span<const double>> spans;
	spans.reserve(columns.size());
	for (const auto& name : columns) {
		spans.push_back(frame.column(name));
	}
	return pelt_detect(SegmentCost(spans, model), penalty, min_size);
}

std::optional<std::size_t> last_changepoint(const Segmentation& seg) noexcept {
	if (seg.changepoints.empty()) {
		return std::nullopt;
	}
	return seg.changepoints.back();
}

nlohmann::json to_json(const Segmentation& seg) {
	return {{"n", seg.n},
	        {"changepoints", seg.changepoints},
	        {"total_cost", seg.total_cost},
	        {"beta", seg.beta},
	        {"cost_model", cost_kind_name(seg.cost_model)}};
}

Segmentation segmentation_from_json(const nlohmann::json& j) {
	Segmentation seg;
	seg.n = j.at("n").get<std::size_t>();
	seg.changepoints = j.at("changepoints").get<std::vector<std::size_t>>();
	seg.total_cost = j.at("total_cost").get<double>();
	seg.beta = j.at("beta").get<double>();
	seg.cost_model = parse_cost_kind(j.at("cost_model").get<std::string>());
	return seg;
}

} // namespace driftcast
