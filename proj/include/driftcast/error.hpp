#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace driftcast {

/// Failure kinds surfaced by the library. The CLI maps these onto exit codes.
enum class Errc {
	// data ingestion and shaping
	MissingColumn,
	UnknownColumn,
	UnparseableTimestamp,
	DuplicateTimestamp,
	EmptyFile,
	LeadingGap,
	TooFewRows,
	InvalidArgument,
	Io,
	// detection
	SegmentTooShort,
	SeriesTooShort,
	// features
	LagExceedsLength,
	WindowTooSmall,
	UnsupportedDegree,
	// models and metrics
	ShapeMismatch,
	NonFiniteLoss,
	LengthMismatch,
	Empty,
	ZeroVariance,
	// pipeline and synth
	MismatchedTestBlocks,
	InvalidRange,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
	Error(Errc code, const std::string& what)
		: std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

	Errc code() const noexcept { return code_; }

private:
	Errc code_;
};

} // namespace driftcast
