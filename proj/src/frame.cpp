#include "driftcast/frame.hpp"

#include "driftcast/error.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace driftcast {

std::string_view errc_name(Errc code) noexcept {
	switch (code) {
	case Errc::MissingColumn: return "MissingColumn";
	case Errc::UnknownColumn: return "UnknownColumn";
	case Errc::UnparseableTimestamp: return "UnparseableTimestamp";
	case Errc::DuplicateTimestamp: return "DuplicateTimestamp";
	case Errc::EmptyFile: return "EmptyFile";
	case Errc::LeadingGap: return "LeadingGap";
	case Errc::TooFewRows: return "TooFewRows";
	case Errc::InvalidArgument: return "InvalidArgument";
	case Errc::Io: return "Io";
	case Errc::SegmentTooShort: return "SegmentTooShort";
	case Errc::SeriesTooShort: return "SeriesTooShort";
	case Errc::LagExceedsLength: return "LagExceedsLength";
	case Errc::WindowTooSmall: return "WindowTooSmall";
	case Errc::UnsupportedDegree: return "UnsupportedDegree";
	case Errc::ShapeMismatch: return "ShapeMismatch";
	case Errc::NonFiniteLoss: return "NonFiniteLoss";
	case Errc::LengthMismatch: return "LengthMismatch";
	case Errc::Empty: return "Empty";
	case Errc::ZeroVariance: return "ZeroVariance";
	case Errc::MismatchedTestBlocks: return "MismatchedTestBlocks";
	case Errc::InvalidRange: return "InvalidRange";
	}
	return "Unknown";
}

// ---------------------------------------------------------------------------
// timestamps

namespace {

constexpr Timestamp kSecondsPerDay = 86400;

Timestamp floor_div(Timestamp a, Timestamp b) {
	Timestamp q = a / b;
	if ((a % b != 0) && ((a < 0) != (b < 0))) {
		--q;
	}
	return q;
}

bool parse_int(std::string_view text, int& out) {
	if (text.empty()) {
		return false;
	}
	auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
	return ec == std::errc{} && ptr == text.data() + text.size();
}

std::string_view trim(std::string_view s) {
	while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
		s.remove_prefix(1);
	}
	while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
		s.remove_suffix(1);
	}
	if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
		s = s.substr(1, s.size() - 2);
	}
	return s;
}

} // namespace

Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour, int minute, int second) {
	using namespace std::chrono;
	const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
	if (!ymd.ok()) {
		throw Error(Errc::InvalidArgument, "invalid calendar date");
	}
	const auto days = sys_days{ymd}.time_since_epoch().count();
	return static_cast<Timestamp>(days) * kSecondsPerDay + hour * 3600 + minute * 60 + second;
}

Timestamp parse_timestamp(std::string_view raw) {
	const auto text = trim(raw);
	const auto fail = [&] {
		return Error(Errc::UnparseableTimestamp, "cannot parse '" + std::string(text) + "'");
	};
	if (text.empty()) {
		throw fail();
	}
	// epoch seconds
	if (text.find('-', 1) == std::string_view::npos && text.find(':') == std::string_view::npos) {
		Timestamp value = 0;
		auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
		if (ec != std::errc{} || ptr != text.data() + text.size()) {
			throw fail();
		}
		return value;
	}
	if (text.size() < 10 || text[4] != '-' || text[7] != '-') {
		throw fail();
	}
	int y = 0, mo = 0, d = 0, hh = 0, mm = 0, ss = 0;
	if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), mo) ||
	    !parse_int(text.substr(8, 2), d)) {
		throw fail();
	}
	auto rest = text.substr(10);
	if (!rest.empty()) {
		if (rest.front() != 'T' && rest.front() != ' ') {
			throw fail();
		}
		rest.remove_prefix(1);
		if (!rest.empty() && rest.back() == 'Z') {
			rest.remove_suffix(1);
		}
		if (rest.size() != 5 && rest.size() != 8) {
			throw fail();
		}
		if (rest[2] != ':' || !parse_int(rest.substr(0, 2), hh) || !parse_int(rest.substr(3, 2), mm)) {
			throw fail();
		}
		if (rest.size() == 8 && (rest[5] != ':' || !parse_int(rest.substr(6, 2), ss))) {
			throw fail();
		}
	}
	if (mo < 1 || mo > 12 || d < 1 || d > 31 || hh < 0 || hh > 23 || mm < 0 || mm > 59 || ss < 0 ||
	    ss > 60) {
		throw fail();
	}
	try {
		return make_timestamp(y, static_cast<unsigned>(mo), static_cast<unsigned>(d), hh, mm, ss);
	} catch (const Error&) {
		throw fail();
	}
}

std::string format_timestamp(Timestamp ts) {
	using namespace std::chrono;
	const Timestamp days = floor_div(ts, kSecondsPerDay);
	const Timestamp secs = ts - days * kSecondsPerDay;
	const year_month_day ymd{sys_days{std::chrono::days{days}}};
	char buf[32];
	std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
	              static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
	              static_cast<int>(secs / 3600), static_cast<int>((secs / 60) % 60),
	              static_cast<int>(secs % 60));
	return buf;
}

int hour_of_day(Timestamp ts) noexcept {
	const Timestamp secs = ts - floor_div(ts, kSecondsPerDay) * kSecondsPerDay;
	return static_cast<int>(secs / 3600);
}

int day_of_week(Timestamp ts) noexcept {
	// 1970-01-01 was a Thursday (Monday-based index 3).
	const Timestamp days = floor_div(ts, kSecondsPerDay);
	return static_cast<int>(((days + 3) % 7 + 7) % 7);
}

// ---------------------------------------------------------------------------
// TimeSeriesFrame

TimeSeriesFrame::TimeSeriesFrame(std::vector<Timestamp> timestamps, std::vector<Column> columns)
	: timestamps_(std::move(timestamps)), columns_(std::move(columns)) {
	for (std::size_t i = 1; i < timestamps_.size(); ++i) {
		if (timestamps_[i] <= timestamps_[i - 1]) {
			throw Error(Errc::InvalidArgument,
			            "timestamps must be strictly increasing at row " + std::to_string(i));
		}
	}
	std::set<std::string_view> seen;
	for (const auto& c : columns_) {
		if (c.name.empty()) {
			throw Error(Errc::InvalidArgument, "empty column name");
		}
		if (!seen.insert(c.name).second) {
			throw Error(Errc::InvalidArgument, "duplicate column name '" + c.name + "'");
		}
		if (c.values.size() != timestamps_.size()) {
			throw Error(Errc::LengthMismatch, "column '" + c.name + "' has " +
			                                      std::to_string(c.values.size()) + " rows, expected " +
			                                      std::to_string(timestamps_.size()));
		}
	}
}

std::vector<std::string> TimeSeriesFrame::column_names() const {
	std::vector<std::string> names;
	names.reserve(columns_.size());
	for (const auto& c : columns_) {
		names.push_back(c.name);
	}
	return names;
}

const Column* TimeSeriesFrame::find(std::string_view name) const noexcept {
	for (const auto& c : columns_) {
		if (c.name == name) {
			return &c;
		}
	}
	return nullptr;
}

bool TimeSeriesFrame::has_column(std::string_view name) const noexcept { return find(name) != nullptr; }

std::span<const double> TimeSeriesFrame::column(std::string_view name) const& {
	const auto* c = find(name);
	if (c == nullptr) {
		throw Error(Errc::UnknownColumn, "no column named '" + std::string(name) + "'");
	}
	return c->values;
}

bool TimeSeriesFrame::is_hourly() const noexcept {
	for (std::size_t i = 1; i < timestamps_.size(); ++i) {
		if (timestamps_[i] - timestamps_[i - 1] != kSecondsPerHour) {
			return false;
		}
	}
	return true;
}

TimeSeriesFrame TimeSeriesFrame::slice(std::size_t begin, std::size_t end) const {
	if (begin > end || end > rows()) {
		throw Error(Errc::InvalidArgument, "slice out of range");
	}
	std::vector<Timestamp> ts(timestamps_.begin() + static_cast<std::ptrdiff_t>(begin),
	                          timestamps_.begin() + static_cast<std::ptrdiff_t>(end));
	std::vector<Column> cols;
	cols.reserve(columns_.size());
	for (const auto& c : columns_) {
		cols.push_back({c.name, std::vector<double>(c.values.begin() + static_cast<std::ptrdiff_t>(begin),
		                                            c.values.begin() + static_cast<std::ptrdiff_t>(end))});
	}
	return TimeSeriesFrame(std::move(ts), std::move(cols));
}

TimeSeriesFrame TimeSeriesFrame::with_column(std::string name, std::vector<double> values) const {
	auto cols = columns_;
	auto it = std::find_if(cols.begin(), cols.end(), [&](const Column& c) { return c.name == name; });
	if (it != cols.end()) {
		it->values = std::move(values);
	} else {
		cols.push_back({std::move(name), std::move(values)});
	}
	return TimeSeriesFrame(timestamps_, std::move(cols));
}

TimeSeriesFrame TimeSeriesFrame::select(std::span<const std::string> names) const {
	std::vector<Column> cols;
	cols.reserve(names.size());
	for (const auto& n : names) {
		const auto values = column(n);
		cols.push_back({n, std::vector<double>(values.begin(), values.end())});
	}
	return TimeSeriesFrame(timestamps_, std::move(cols));
}

bool operator==(const TimeSeriesFrame& a, const TimeSeriesFrame& b) {
	if (a.timestamps_ != b.timestamps_ || a.columns_.size() != b.columns_.size()) {
		return false;
	}
	for (std::size_t c = 0; c < a.columns_.size(); ++c) {
		const auto& ca = a.columns_[c];
		const auto& cb = b.columns_[c];
		if (ca.name != cb.name) {
			return false;
		}
		for (std::size_t i = 0; i < ca.values.size(); ++i) {
			const double x = ca.values[i];
			const double y = cb.values[i];
			if (!(x == y || (is_missing(x) && is_missing(y)))) {
				return false;
			}
		}
	}
	return true;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string_view unquote(std::string_view cell) {
	cell = trim(cell);
	if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') {
		cell = cell.substr(1, cell.size() - 2);
	}
	return cell;
}

std::vector<std::string_view> split_line(std::string_view line) {
	std::vector<std::string_view> out;
	std::size_t start = 0;
	bool quoted = false;
	for (std::size_t i = 0; i < line.size(); ++i) {
		if (line[i] == '"') {
			quoted = !quoted;
		} else if (line[i] == ',' && !quoted) {
			out.push_back(unquote(line.substr(start, i - start)));
			start = i + 1;
		}
	}
	out.push_back(unquote(line.substr(start)));
	return out;
}

double parse_cell(std::string_view cell) {
	if (cell.empty() || cell == "NaN" || cell == "nan" || cell == "NA") {
		return kMissing;
	}
	double value = 0.0;
	auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
	if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
		return kMissing;
	}
	return value;
}

std::string format_double(double v) {
	if (is_missing(v)) {
		return {};
	}
	char buf[32];
	std::snprintf(buf, sizeof buf, "%.17g", v);
	return buf;
}

} // namespace

TimeSeriesFrame parse_csv(std::string_view text, const CsvSchema& schema) {
	if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") {
		text.remove_prefix(3);
	}
	std::vector<std::string_view> lines;
	std::size_t pos = 0;
	while (pos < text.size()) {
		auto nl = text.find('\n', pos);
		if (nl == std::string_view::npos) {
			nl = text.size();
		}
		auto line = text.substr(pos, nl - pos);
		if (!trim(line).empty()) {
			lines.push_back(line);
		}
		pos = nl + 1;
	}
	if (lines.size() < 2) {
		throw Error(Errc::EmptyFile, "no data rows");
	}

	const auto header = split_line(lines.front());
	std::unordered_map<std::string_view, std::size_t> index;
	for (std::size_t i = 0; i < header.size(); ++i) {
		index.emplace(header[i], i);
	}
	const auto ts_it = index.find(schema.timestamp_column);
	if (ts_it == index.end()) {
		throw Error(Errc::MissingColumn, "timestamp column '" + schema.timestamp_column + "' not in header");
	}
	std::vector<std::pair<std::string, std::size_t>> wanted;
	if (schema.columns.empty()) {
		for (std::size_t i = 0; i < header.size(); ++i) {
			if (i != ts_it->second) {
				wanted.emplace_back(std::string(header[i]), i);
			}
		}
	} else {
		for (const auto& name : schema.columns) {
			const auto it = index.find(name);
			if (it == index.end()) {
				throw Error(Errc::MissingColumn, "column '" + name + "' not in header");
			}
			wanted.emplace_back(name, it->second);
		}
	}

	const std::size_t n = lines.size() - 1;
	std::vector<Timestamp> ts(n);
	std::vector<std::vector<double>> values(wanted.size(), std::vector<double>(n));
	for (std::size_t r = 0; r < n; ++r) {
		const auto cells = split_line(lines[r + 1]);
		const auto cell = [&](std::size_t i) { return i < cells.size() ? cells[i] : std::string_view{}; };
		ts[r] = parse_timestamp(cell(ts_it->second));
		for (std::size_t c = 0; c < wanted.size(); ++c) {
			values[c][r] = parse_cell(cell(wanted[c].second));
		}
	}

	std::vector<std::size_t> order(n);
	std::iota(order.begin(), order.end(), 0);
	std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ts[a] < ts[b]; });
	std::vector<Timestamp> sorted_ts(n);
	for (std::size_t r = 0; r < n; ++r) {
		sorted_ts[r] = ts[order[r]];
		if (r > 0 && sorted_ts[r] == sorted_ts[r - 1]) {
			throw Error(Errc::DuplicateTimestamp, format_timestamp(sorted_ts[r]));
		}
	}
	std::vector<Column> cols;
	cols.reserve(wanted.size());
	for (std::size_t c = 0; c < wanted.size(); ++c) {
		std::vector<double> sorted(n);
		for (std::size_t r = 0; r < n; ++r) {
			sorted[r] = values[c][order[r]];
		}
		cols.push_back({wanted[c].first, std::move(sorted)});
	}
	return TimeSeriesFrame(std::move(sorted_ts), std::move(cols));
}

TimeSeriesFrame load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw Error(Errc::Io, "cannot open " + path.string());
	}
	std::stringstream buffer;
	buffer << in.rdbuf();
	return parse_csv(buffer.str(), schema);
}

std::string to_csv(const TimeSeriesFrame& frame, std::string_view timestamp_column) {
	std::string out(timestamp_column);
	for (const auto& c : frame.columns()) {
		out += ',';
		out += c.name;
	}
	out += '\n';
	const auto ts = frame.timestamps();
	for (std::size_t r = 0; r < frame.rows(); ++r) {
		out += format_timestamp(ts[r]);
		for (const auto& c : frame.columns()) {
			out += ',';
			out += format_double(c.values[r]);
		}
		out += '\n';
	}
	return out;
}

void write_csv(const TimeSeriesFrame& frame, const std::filesystem::path& path,
               std::string_view timestamp_column) {
	std::ofstream out(path, std::ios::binary);
	if (!out) {
		throw Error(Errc::Io, "cannot write " + path.string());
	}
	out << to_csv(frame, timestamp_column);
}

// ---------------------------------------------------------------------------
// cleaning and splitting

TimeSeriesFrame forward_fill(const TimeSeriesFrame& frame, std::string_view column) {
	const auto src = frame.column(column);
	std::vector<double> filled(src.begin(), src.end());
	if (!filled.empty() && is_missing(filled.front())) {
		throw Error(Errc::LeadingGap, "first value of '" + std::string(column) + "' is missing");
	}
	for (std::size_t i = 1; i < filled.size(); ++i) {
		if (is_missing(filled[i])) {
			filled[i] = filled[i - 1];
		}
	}
	return frame.with_column(std::string(column), std::move(filled));
}

TimeSeriesFrame resample_hourly(const TimeSeriesFrame& frame) {
	if (frame.rows() == 0) {
		return frame;
	}
	const auto ts = frame.timestamps();
	const Timestamp first = -floor_div(-ts.front(), kSecondsPerHour) * kSecondsPerHour;
	const Timestamp last = floor_div(ts.back(), kSecondsPerHour) * kSecondsPerHour;
	std::vector<Timestamp> grid;
	for (Timestamp t = first; t <= last; t += kSecondsPerHour) {
		grid.push_back(t);
	}
	std::vector<Column> cols;
	for (const auto& c : frame.columns()) {
		cols.push_back({c.name, std::vector<double>(grid.size(), kMissing)});
	}
	std::size_t src = 0;
	for (std::size_t g = 0; g < grid.size(); ++g) {
		while (src < ts.size() && ts[src] < grid[g]) {
			++src;
		}
		if (src < ts.size() && ts[src] == grid[g]) {
			for (std::size_t c = 0; c < cols.size(); ++c) {
				cols[c].values[g] = frame.columns()[c].values[src];
			}
		}
	}
	return TimeSeriesFrame(std::move(grid), std::move(cols));
}

std::size_t SplitSpec::boundary(std::size_t n) const {
	if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
		throw Error(Errc::InvalidArgument, "train_fraction must lie in (0, 1)");
	}
	return static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
}

FrameSplit chronological_split(const TimeSeriesFrame& frame, const SplitSpec& spec) {
	const std::size_t n = frame.rows();
	if (n < 10) {
		throw Error(Errc::TooFewRows, "split needs at least 10 rows, got " + std::to_string(n));
	}
	const std::size_t b = spec.boundary(n);
	if (b == 0 || b >= n) {
		throw Error(Errc::InvalidArgument, "split boundary leaves an empty side");
	}
	return {frame.slice(0, b), frame.slice(b, n)};
}

// ---------------------------------------------------------------------------
// Scaler

namespace {

std::pair<double, double> mean_std(std::span<const double> values) {
	double sum = 0.0;
	std::size_t count = 0;
	for (double v : values) {
		if (!is_missing(v)) {
			sum += v;
			++count;
		}
	}
	if (count == 0) {
		return {0.0, Scaler::kStdFloor};
	}
	const double mean = sum / static_cast<double>(count);
	double ss = 0.0;
	for (double v : values) {
		if (!is_missing(v)) {
			ss += (v - mean) * (v - mean);
		}
	}
	const double sd = std::sqrt(ss / static_cast<double>(count));
	return {mean, sd < Scaler::kStdFloor ? Scaler::kStdFloor : sd};
}

} // namespace

Scaler::Scaler(std::vector<std::string> names, std::vector<double> means, std::vector<double> stds)
	: names_(std::move(names)), means_(std::move(means)), stds_(std::move(stds)) {
	if (names_.size() != means_.size() || names_.size() != stds_.size()) {
		throw Error(Errc::LengthMismatch, "scaler fields disagree in length");
	}
}

Scaler Scaler::fit(const TimeSeriesFrame& frame, std::span<const std::string> columns) {
	std::vector<std::string> names;
	std::vector<double> means, stds;
	for (const auto& name : columns) {
		const auto [m, s] = mean_std(frame.column(name));
		names.push_back(name);
		means.push_back(m);
		stds.push_back(s);
	}
	return Scaler(std::move(names), std::move(means), std::move(stds));
}

Scaler Scaler::fit(const Matrix& x, std::vector<std::string> names) {
	if (names.size() != static_cast<std::size_t>(x.cols())) {
		throw Error(Errc::ShapeMismatch, "scaler names do not match matrix columns");
	}
	std::vector<double> means, stds;
	std::vector<double> col(static_cast<std::size_t>(x.rows()));
	for (Eigen::Index j = 0; j < x.cols(); ++j) {
		for (Eigen::Index i = 0; i < x.rows(); ++i) {
			col[static_cast<std::size_t>(i)] = x(i, j);
		}
		const auto [m, s] = mean_std(col);
		means.push_back(m);
		stds.push_back(s);
	}
	return Scaler(std::move(names), std::move(means), std::move(stds));
}

Scaler Scaler::fit(std::span<const double> values, std::string name) {
	const auto [m, s] = mean_std(values);
	return Scaler({std::move(name)}, {m}, {s});
}

TimeSeriesFrame Scaler::apply(const TimeSeriesFrame& frame) const {
	TimeSeriesFrame out = frame;
	for (std::size_t k = 0; k < names_.size(); ++k) {
		const auto src = frame.column(names_[k]);
		std::vector<double> v(src.size());
		for (std::size_t i = 0; i < v.size(); ++i) {
			v[i] = (src[i] - means_[k]) / stds_[k];
		}
		out = out.with_column(names_[k], std::move(v));
	}
	return out;
}

TimeSeriesFrame Scaler::invert(const TimeSeriesFrame& frame) const {
	TimeSeriesFrame out = frame;
	for (std::size_t k = 0; k < names_.size(); ++k) {
		const auto src = frame.column(names_[k]);
		std::vector<double> v(src.size());
		for (std::size_t i = 0; i < v.size(); ++i) {
			v[i] = src[i] * stds_[k] + means_[k];
		}
		out = out.with_column(names_[k], std::move(v));
	}
	return out;
}

Matrix Scaler::apply(const Matrix& x) const {
	if (static_cast<std::size_t>(x.cols()) != names_.size()) {
		throw Error(Errc::ShapeMismatch, "matrix has " + std::to_string(x.cols()) + " columns, scaler has " +
		                                     std::to_string(names_.size()));
	}
	Matrix out(x.rows(), x.cols());
	for (Eigen::Index j = 0; j < x.cols(); ++j) {
		const auto k = static_cast<std::size_t>(j);
		out.col(j) = (x.col(j).array() - means_[k]) / stds_[k];
	}
	return out;
}

Vector Scaler::apply(std::span<const double> values, std::size_t index) const {
	Vector out(static_cast<Eigen::Index>(values.size()));
	for (std::size_t i = 0; i < values.size(); ++i) {
		out(static_cast<Eigen::Index>(i)) = (values[i] - means_.at(index)) / stds_.at(index);
	}
	return out;
}

Vector Scaler::invert(const Vector& values, std::size_t index) const {
	return (values.array() * stds_.at(index) + means_.at(index)).matrix();
}

} // namespace driftcast
