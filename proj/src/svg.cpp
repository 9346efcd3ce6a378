#include "driftcast/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace driftcast::svg {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string num(double v) {
	char buf[32];
	std::snprintf(buf, sizeof buf, "%.2f", v);
	return buf;
}

std::string label_num(double v) {
	char buf[32];
	std::snprintf(buf, sizeof buf, "%.4g", v);
	return buf;
}

std::string escape(const std::string& s) {
	std::string out;
	for (char c : s) {
		switch (c) {
		case '&': out += "&amp;"; break;
		case '<': out += "&lt;"; break;
		case '>': out += "&gt;"; break;
		case '"': out += "&quot;"; break;
		default: out += c;
		}
	}
	return out;
}

struct Range {
	double lo = std::numeric_limits<double>::infinity();
	double hi = -std::numeric_limits<double>::infinity();

	void add(double v) {
		if (std::isfinite(v)) {
			lo = std::min(lo, v);
			hi = std::max(hi, v);
		}
	}
	void settle() {
		if (!std::isfinite(lo)) {
			lo = 0.0;
			hi = 1.0;
		}
		if (hi - lo < 1e-12) {
			lo -= 0.5;
			hi += 0.5;
		}
	}
};

} // namespace

std::string render(const LinePlot& plot) {
	constexpr double width = 960, height = 420;
	constexpr double left = 70, right = 160, top = 40, bottom = 50;
	const double pw = width - left - right;
	const double ph = height - top - bottom;

	Range xr, yr;
	for (const auto& s : plot.series) {
		for (double v : s.x) xr.add(v);
		for (double v : s.y) yr.add(v);
	}
	for (double m : plot.markers) xr.add(m);
	xr.settle();
	yr.settle();
	const auto sx = [&](double v) { return left + (v - xr.lo) / (xr.hi - xr.lo) * pw; };
	const auto sy = [&](double v) { return top + ph - (v - yr.lo) / (yr.hi - yr.lo) * ph; };

	std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
	                  num(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
	out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
	out += "<text x=\"" + num(width / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
	       escape(plot.title) + "</text>\n";
	out += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
	       "\" fill=\"none\" stroke=\"#444\"/>\n";
	for (int i = 0; i <= 4; ++i) {
		const double yv = yr.lo + (yr.hi - yr.lo) * i / 4.0;
		const double xv = xr.lo + (xr.hi - xr.lo) * i / 4.0;
		out += "<text x=\"" + num(left - 6) + "\" y=\"" + num(sy(yv) + 4) + "\" text-anchor=\"end\">" +
		       label_num(yv) + "</text>\n";
		out += "<text x=\"" + num(sx(xv)) + "\" y=\"" + num(top + ph + 16) + "\" text-anchor=\"middle\">" +
		       label_num(xv) + "</text>\n";
	}
	out += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(height - 10) + "\" text-anchor=\"middle\">" +
	       escape(plot.x_label) + "</text>\n";
	out += "<text x=\"16\" y=\"" + num(top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
	       num(top + ph / 2) + ")\">" + escape(plot.y_label) + "</text>\n";

	for (std::size_t s = 0; s < plot.series.size(); ++s) {
		const auto& series = plot.series[s];
		const std::size_t n = std::min(series.x.size(), series.y.size());
		const std::size_t stride = std::max<std::size_t>(1, (n + plot.max_points - 1) / plot.max_points);
		out += "<polyline fill=\"none\" stroke-width=\"1\" stroke=\"" + std::string(kPalette[s % 6]) + "\" points=\"";
		for (std::size_t i = 0; i < n; i += stride) {
			if (std::isfinite(series.y[i])) {
				out += num(sx(series.x[i])) + "," + num(sy(series.y[i])) + " ";
			}
		}
		out += "\"/>\n";
		const double ly = top + 14 + 18.0 * static_cast<double>(s);
		out += "<line x1=\"" + num(left + pw + 12) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" + num(left + pw + 30) +
		       "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + kPalette[s % 6] + "\" stroke-width=\"2\"/>\n";
		out += "<text x=\"" + num(left + pw + 36) + "\" y=\"" + num(ly) + "\">" + escape(series.label) + "</text>\n";
	}
	for (double m : plot.markers) {
		out += "<line x1=\"" + num(sx(m)) + "\" y1=\"" + num(top) + "\" x2=\"" + num(sx(m)) + "\" y2=\"" +
		       num(top + ph) + "\" stroke=\"#d62728\" stroke-dasharray=\"4 3\"/>\n";
	}
	out += "</svg>\n";
	return out;
}

std::string render(const std::string& title, const std::vector<BarPanel>& panels) {
	constexpr double width = 900, panel_h = 240, top = 40, left = 70, right = 170;
	const double height = top + panel_h * static_cast<double>(panels.size()) + 20;
	const double pw = width - left - right;

	std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
	                  num(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
	out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
	out += "<text x=\"" + num(width / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + escape(title) +
	       "</text>\n";

	for (std::size_t p = 0; p < panels.size(); ++p) {
		const auto& panel = panels[p];
		const double y0 = top + panel_h * static_cast<double>(p) + 24;
		const double ph = panel_h - 70;
		Range r;
		r.add(0.0);
		for (const auto& g : panel.values) {
			for (double v : g) r.add(v);
		}
		r.settle();
		const auto sy = [&](double v) { return y0 + ph - (v - r.lo) / (r.hi - r.lo) * ph; };

		out += "<text x=\"" + num(left) + "\" y=\"" + num(y0 - 6) + "\" font-weight=\"bold\">" + escape(panel.title) +
		       "</text>\n";
		out += "<rect x=\"" + num(left) + "\" y=\"" + num(y0) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
		       "\" fill=\"none\" stroke=\"#444\"/>\n";
		out += "<line x1=\"" + num(left) + "\" y1=\"" + num(sy(0)) + "\" x2=\"" + num(left + pw) + "\" y2=\"" +
		       num(sy(0)) + "\" stroke=\"#888\"/>\n";
		for (int i = 0; i <= 4; ++i) {
			const double v = r.lo + (r.hi - r.lo) * i / 4.0;
			out += "<text x=\"" + num(left - 6) + "\" y=\"" + num(sy(v) + 4) + "\" text-anchor=\"end\">" +
			       label_num(v) + "</text>\n";
		}

		const std::size_t cats = panel.categories.size();
		const std::size_t groups = panel.groups.size();
		if (cats == 0 || groups == 0) {
			continue;
		}
		const double slot = pw / static_cast<double>(cats);
		const double bar = slot * 0.8 / static_cast<double>(groups);
		for (std::size_t c = 0; c < cats; ++c) {
			const double x0 = left + slot * static_cast<double>(c) + slot * 0.1;
			for (std::size_t g = 0; g < groups; ++g) {
				const double v = g < panel.values.size() && c < panel.values[g].size() ? panel.values[g][c] : 0.0;
				if (!std::isfinite(v)) {
					continue;
				}
				const double ya = sy(std::max(v, 0.0));
				const double yb = sy(std::min(v, 0.0));
				out += "<rect x=\"" + num(x0 + bar * static_cast<double>(g)) + "\" y=\"" + num(ya) + "\" width=\"" +
				       num(bar * 0.95) + "\" height=\"" + num(yb - ya) + "\" fill=\"" + kPalette[g % 6] + "\"/>\n";
			}
			out += "<text x=\"" + num(x0 + slot * 0.4) + "\" y=\"" + num(y0 + ph + 16) +
			       "\" text-anchor=\"middle\">" + escape(panel.categories[c]) + "</text>\n";
		}
		if (p == 0) {
			for (std::size_t g = 0; g < groups; ++g) {
				const double ly = y0 + 14 + 18.0 * static_cast<double>(g);
				out += "<rect x=\"" + num(left + pw + 12) + "\" y=\"" + num(ly - 10) +
				       "\" width=\"14\" height=\"10\" fill=\"" + kPalette[g % 6] + "\"/>\n";
				out += "<text x=\"" + num(left + pw + 32) + "\" y=\"" + num(ly) + "\">" + escape(panel.groups[g]) +
				       "</text>\n";
			}
		}
	}
	out += "</svg>\n";
	return out;
}

} // namespace driftcast::svg
