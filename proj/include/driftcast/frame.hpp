#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace driftcast {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Seconds since 1970-01-01T00:00:00, interpreted as a naive local instant.
using Timestamp = std::int64_t;
inline constexpr Timestamp kSecondsPerHour = 3600;

/// Missing-cell sentinel. Valid readings are always finite, so a quiet NaN
/// never collides with one.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) noexcept { return v != v; }

Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour = 0, int minute = 0,
                         int second = 0);
/// Accepts `YYYY-MM-DD[(T| )HH:MM[:SS]]` or integral epoch seconds.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);
int hour_of_day(Timestamp ts) noexcept;
/// Monday = 0 ... Sunday = 6.
int day_of_week(Timestamp ts) noexcept;

struct Column {
	std::string name;
	std::vector<double> values;
};

/// Timestamped numeric table. Timestamps are strictly increasing; every
/// column has one value per timestamp. Immutable once constructed.
class TimeSeriesFrame {
public:
	TimeSeriesFrame() = default;
	TimeSeriesFrame(std::vector<Timestamp> timestamps, std::vector<Column> columns);

	std::size_t rows() const noexcept { return timestamps_.size(); }
	std::span<const Timestamp> timestamps() const noexcept { return timestamps_; }
	const std::vector<Column>& columns() const noexcept { return columns_; }
	std::vector<std::string> column_names() const;

	bool has_column(std::string_view name) const noexcept;
	std::span<const double> column(std::string_view name) const&;
	/// A span into a temporary frame would dangle.
	std::span<const double> column(std::string_view name) const&& = delete;

	/// True when consecutive timestamps are exactly one hour apart.
	bool is_hourly() const noexcept;

	/// Rows [begin, end).
	TimeSeriesFrame slice(std::size_t begin, std::size_t end) const;
	/// Adds the column, or replaces an existing column of the same name.
	TimeSeriesFrame with_column(std::string name, std::vector<double> values) const;
	TimeSeriesFrame select(std::span<const std::string> names) const;

	friend bool operator==(const TimeSeriesFrame& a, const TimeSeriesFrame& b);

private:
	const Column* find(std::string_view name) const noexcept;

	std::vector<Timestamp> timestamps_;
	std::vector<Column> columns_;
};

struct CsvSchema {
	std::string timestamp_column = "timestamp";
	/// Columns to keep. Empty keeps every non-timestamp column.
	std::vector<std::string> columns;
};

TimeSeriesFrame load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
TimeSeriesFrame parse_csv(std::string_view text, const CsvSchema& schema = {});
void write_csv(const TimeSeriesFrame& frame, const std::filesystem::path& path,
               std::string_view timestamp_column = "timestamp");
std::string to_csv(const TimeSeriesFrame& frame, std::string_view timestamp_column = "timestamp");

TimeSeriesFrame forward_fill(const TimeSeriesFrame& frame, std::string_view column);

/// Re-grids onto whole hours between the first and last timestamp. Grid points
/// absent from the input become missing cells.
TimeSeriesFrame resample_hourly(const TimeSeriesFrame& frame);

struct SplitSpec {
	double train_fraction = 0.8;

	std::size_t boundary(std::size_t n) const;
};

struct FrameSplit {
	TimeSeriesFrame train;
	TimeSeriesFrame test;
};

FrameSplit chronological_split(const TimeSeriesFrame& frame, const SplitSpec& spec);

/// Per-column z-scoring with population standard deviation.
class Scaler {
public:
	static constexpr double kStdFloor = 1e-8;

	Scaler() = default;
	Scaler(std::vector<std::string> names, std::vector<double> means, std::vector<double> stds);

	static Scaler fit(const TimeSeriesFrame& frame, std::span<const std::string> columns);
	/// Fits one entry per matrix column; `names` labels them positionally.
	static Scaler fit(const Matrix& x, std::vector<std::string> names);
	static Scaler fit(std::span<const double> values, std::string name);

	TimeSeriesFrame apply(const TimeSeriesFrame& frame) const;
	TimeSeriesFrame invert(const TimeSeriesFrame& frame) const;
	Matrix apply(const Matrix& x) const;
	Vector apply(std::span<const double> values, std::size_t index = 0) const;
	Vector invert(const Vector& values, std::size_t index = 0) const;

	std::size_t size() const noexcept { return names_.size(); }
	const std::vector<std::string>& names() const noexcept { return names_; }
	const std::vector<double>& means() const noexcept { return means_; }
	const std::vector<double>& stds() const noexcept { return stds_; }

private:
	std::vector<std::string> names_;
	std::vector<double> means_;
	std::vector<double> stds_;
};

} // namespace driftcast
