#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace modalcur::svg {

// Greyscale heatmap for values in [0,1] with each value printed in its cell.
std::string heatmap(const Eigen::MatrixXd& values, const std::vector<std::string>& labels, const std::string& title);

struct Series {
  std::string name;
  std::vector<double> values;
};

// Grouped bar chart: one group per category, one bar per series.
std::string bar_chart(const std::vector<std::string>& categories, const std::vector<Series>& series,
                      const std::string& title, double y_max);

}  // namespace modalcur::svg
