#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gesbl/arx_model.hpp"
#include "gesbl/metrics.hpp"
#include "gesbl/sbl.hpp"

namespace gesbl {

// Text forms. Doubles are written with 17 significant digits so that
// parse -> format reproduces the input text.

/// Header `t,y1..yp,u1..um`, one row per sample, t counted from 0.
std::string format_data_csv(const TimeSeriesData& data);
/// Input columns are recognized by the `u` prefix of their header.
TimeSeriesData parse_data_csv(const std::string& text);

/// JSON object with p, m, order_a, order_b, a_coeffs, b_coeffs, noise_var.
/// a_coeffs[i][j] lists the coefficients of z^-1 .. z^-order_a.
std::string format_network_json(const ArxNetwork& net);
ArxNetwork parse_network_json(const std::string& text);

/// JSON object with w, group_norms, confidences, estimated_orders, lambda,
/// cost_trajectory, iterations, converged, plus node, k, lagged and
/// group_sizes so the group structure can be rebuilt.
std::string format_result_json(const InferenceResult& result);
InferenceResult parse_result_json(const std::string& text);

std::string format_topology_json(const Topology& topo);
Topology parse_topology_json(const std::string& text);

/// `threshold,fpr,tpr` for ROC or `threshold,recall,precision` for PR.
std::string format_curve_csv(const std::vector<CurvePoint>& points, bool roc);

std::string read_text(const std::filesystem::path& path);
/// Creates missing parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace gesbl
