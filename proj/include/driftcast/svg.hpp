#pragma once

#include <string>
#include <vector>

namespace driftcast::svg {

struct Series {
	std::string label;
	std::vector<double> x;
	std::vector<double> y;
};

struct LinePlot {
	std::string title;
	std::string x_label;
	std::string y_label;
	std::vector<Series> series;
	/// Vertical markers drawn at these x positions.
	std::vector<double> markers;
	/// Longer series are thinned by striding to keep files small.
	std::size_t max_points = 2000;
};

std::string render(const LinePlot& plot);

/// One panel of grouped bars: categories along x, one bar per group label.
struct BarPanel {
	std::string title;
	std::vector<std::string> categories;
	std::vector<std::string> groups;
	/// values[group][category]
	std::vector<std::vector<double>> values;
};

/// Panels stacked vertically, sharing a legend.
std::string render(const std::string& title, const std::vector<BarPanel>& panels);

} // namespace driftcast::svg
