#include "gesbl/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gesbl/errors.hpp"

namespace gesbl {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& cell, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::Parse, "data csv line " + std::to_string(line) + ": bad number '" + cell + "'");
  }
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  return out;
}

json tensor_to_json(const CoeffTensor& c) {
  json rows = json::array();
  for (int i = 0; i < c.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < c.cols(); ++j) {
      json poly = json::array();
      for (int l = 0; l < c.depth(); ++l) poly.push_back(c(i, j, l));
      row.push_back(std::move(poly));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void tensor_from_json(const json& j, CoeffTensor& c, const char* name) {
  require(j.is_array() && static_cast<int>(j.size()) == c.rows(), ErrorCode::Parse,
          std::string(name) + ": wrong row count");
  for (int i = 0; i < c.rows(); ++i) {
    require(j[i].is_array() && static_cast<int>(j[i].size()) == c.cols(), ErrorCode::Parse,
            std::string(name) + ": wrong column count");
    for (int k = 0; k < c.cols(); ++k) {
      const json& poly = j[i][k];
      require(poly.is_array() && static_cast<int>(poly.size()) == c.depth(), ErrorCode::Parse,
              std::string(name) + ": wrong polynomial length");
      for (int l = 0; l < c.depth(); ++l) c(i, k, l) = poly[l].get<double>();
    }
  }
}

json vec_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json edges_to_json(const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& e) {
  json rows = json::array();
  for (int i = 0; i < e.rows(); ++i) {
    std::vector<int> row(e.cols());
    for (int j = 0; j < e.cols(); ++j) row[j] = e(i, j) ? 1 : 0;
    rows.push_back(row);
  }
  return rows;
}

Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> edges_from_json(const json& j, int rows,
                                                                  int cols) {
  require(j.is_array() && static_cast<int>(j.size()) == rows, ErrorCode::Parse,
          "topology: wrong row count");
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> e(rows, cols);
  for (int i = 0; i < rows; ++i) {
    require(j[i].is_array() && static_cast<int>(j[i].size()) == cols, ErrorCode::Parse,
            "topology: wrong column count");
    for (int k = 0; k < cols; ++k) e(i, k) = j[i][k].get<int>() != 0;
  }
  return e;
}

template <class F>
auto parse_json(const std::string& text, const char* what, F&& body) {
  try {
    return body(json::parse(text));
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string format_data_csv(const TimeSeriesData& data) {
  data.validate();
  std::string out = "t";
  for (int i = 0; i < data.p(); ++i) out += ",y" + std::to_string(i + 1);
  for (int i = 0; i < data.m(); ++i) out += ",u" + std::to_string(i + 1);
  out += '\n';
  for (int s = 0; s < data.t(); ++s) {
    out += std::to_string(s);
    for (int i = 0; i < data.p(); ++i) out += ',' + fmt(data.y(i, s));
    for (int i = 0; i < data.m(); ++i) out += ',' + fmt(data.u(i, s));
    out += '\n';
  }
  return out;
}

TimeSeriesData parse_data_csv(const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  require(static_cast<bool>(std::getline(ss, line)), ErrorCode::Parse, "data csv: empty input");
  const auto header = split(line);
  require(!header.empty() && header[0] == "t", ErrorCode::Parse,
          "data csv: header must start with 't'");
  int p = 0, m = 0;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const std::string& h = header[c];
    require(!h.empty() && (h[0] == 'y' || h[0] == 'u'), ErrorCode::Parse,
            "data csv: unexpected column '" + h + "'");
    if (h[0] == 'y') {
      require(m == 0, ErrorCode::Parse, "data csv: output columns must precede inputs");
      ++p;
    } else {
      ++m;
    }
  }
  require(p > 0, ErrorCode::Parse, "data csv: no output columns");

  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(ss, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    require(cells.size() == header.size(), ErrorCode::Parse,
            "data csv line " + std::to_string(lineno) + ": wrong number of fields");
    std::vector<double> row(cells.size() - 1);
    for (std::size_t c = 1; c < cells.size(); ++c) row[c - 1] = parse_double(cells[c], lineno);
    rows.push_back(std::move(row));
  }
  const int t = static_cast<int>(rows.size());
  TimeSeriesData data;
  data.y.resize(p, t);
  data.u.resize(m, t);
  for (int s = 0; s < t; ++s) {
    for (int i = 0; i < p; ++i) data.y(i, s) = rows[s][i];
    for (int i = 0; i < m; ++i) data.u(i, s) = rows[s][p + i];
  }
  data.validate();
  return data;
}

std::string format_network_json(const ArxNetwork& net) {
  net.validate();
  json j;
  j["p"] = net.p;
  j["m"] = net.m;
  j["order_a"] = net.order_a;
  j["order_b"] = net.order_b;
  j["a_coeffs"] = tensor_to_json(net.a_coeffs);
  j["b_coeffs"] = tensor_to_json(net.b_coeffs);
  j["noise_var"] = vec_to_json(net.noise_var);
  return j.dump(2) + '\n';
}

ArxNetwork parse_network_json(const std::string& text) {
  return parse_json(text, "network json", [](const json& j) {
    ArxNetwork net(j.at("p").get<int>(), j.at("m").get<int>(), j.at("order_a").get<int>(),
                   j.at("order_b").get<int>());
    tensor_from_json(j.at("a_coeffs"), net.a_coeffs, "a_coeffs");
    tensor_from_json(j.at("b_coeffs"), net.b_coeffs, "b_coeffs");
    net.noise_var = vec_from_json(j.at("noise_var"));
    net.validate();
    return net;
  });
}

std::string format_result_json(const InferenceResult& r) {
  json j;
  j["node"] = r.node;
  j["k"] = r.k;
  j["lagged"] = r.lagged;
  j["group_sizes"] = r.groups.sizes();
  json labels = json::array();
  for (int g = 0; g < r.groups.count(); ++g) {
    const auto& l = r.groups.label(g);
    labels.push_back({{"kind", l.kind == RegulatorKind::Node ? "node" : "input"}, {"index", l.index}});
  }
  j["group_labels"] = labels;
  j["w"] = vec_to_json(r.w);
  j["group_norms"] = vec_to_json(r.group_norms);
  j["confidences"] = vec_to_json(r.confidences);
  j["estimated_orders"] = r.estimated_orders;
  j["lambda"] = r.hyper.lambda;
  j["cost_trajectory"] = r.cost_trajectory;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  return j.dump(2) + '\n';
}

InferenceResult parse_result_json(const std::string& text) {
  return parse_json(text, "result json", [](const json& j) {
    InferenceResult r;
    r.node = j.at("node").get<int>();
    r.k = j.at("k").get<int>();
    r.lagged = j.at("lagged").get<bool>();
    const auto sizes = j.at("group_sizes").get<std::vector<int>>();
    const json& labels = j.at("group_labels");
    require(labels.size() == sizes.size(), ErrorCode::Parse,
            "result json: group_labels and group_sizes differ in length");
    for (std::size_t g = 0; g < sizes.size(); ++g) {
      const std::string kind = labels[g].at("kind").get<std::string>();
      require(kind == "node" || kind == "input", ErrorCode::Parse,
              "result json: unknown group kind '" + kind + "'");
      r.groups.add(sizes[g], {kind == "node" ? RegulatorKind::Node : RegulatorKind::Input,
                              labels[g].at("index").get<int>()});
    }
    r.w = vec_from_json(j.at("w"));
    r.group_norms = vec_from_json(j.at("group_norms"));
    r.confidences = vec_from_json(j.at("confidences"));
    r.estimated_orders = j.at("estimated_orders").get<std::vector<int>>();
    r.hyper.lambda = j.at("lambda").get<double>();
    r.cost_trajectory = j.at("cost_trajectory").get<std::vector<double>>();
    r.iterations = j.at("iterations").get<int>();
    r.converged = j.at("converged").get<bool>();
    const auto groups = static_cast<Eigen::Index>(sizes.size());
    require(r.w.size() == r.groups.dim() && r.group_norms.size() == groups &&
                r.confidences.size() == groups &&
                static_cast<Eigen::Index>(r.estimated_orders.size()) == groups,
            ErrorCode::Parse, "result json: inconsistent lengths");
    return r;
  });
}

std::string format_topology_json(const Topology& topo) {
  json j;
  j["p"] = topo.p();
  j["m"] = topo.m();
  j["a_edges"] = edges_to_json(topo.a_edges);
  j["b_edges"] = edges_to_json(topo.b_edges);
  return j.dump(2) + '\n';
}

Topology parse_topology_json(const std::string& text) {
  return parse_json(text, "topology json", [](const json& j) {
    const int p = j.at("p").get<int>();
    const int m = j.at("m").get<int>();
    Topology t;
    t.a_edges = edges_from_json(j.at("a_edges"), p, p);
    t.b_edges = edges_from_json(j.at("b_edges"), p, m);
    return t;
  });
}

std::string format_curve_csv(const std::vector<CurvePoint>& points, bool roc) {
  std::string out = roc ? "threshold,fpr,tpr\n" : "threshold,recall,precision\n";
  for (const auto& pt : points) out += fmt(pt.threshold) + ',' + fmt(pt.x) + ',' + fmt(pt.y) + '\n';
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::Io, "cannot write " + path.string());
  out << text;
  out.flush();
  require(out.good(), ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace gesbl
