#pragma once

#include <string>
#include <vector>

namespace dcca::svg {

struct Series {
  std::string name;
  std::vector<double> values;
};

// Grouped bars, one group per category.
std::string bar_chart(const std::string& title, const std::vector<std::string>& categories,
                      const std::vector<Series>& series, const std::string& y_label);

// Polylines with point markers over shared x values.
std::string line_plot(const std::string& title, const std::vector<double>& x, const std::vector<Series>& series,
                      const std::string& x_label, const std::string& y_label);

}  // namespace dcca::svg
