#include "siscale/io.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

namespace siscale::io {

using nlohmann::json;

Eigen::MatrixXd matrix_from_json(const json& j) {
  detail::require(j.is_array() && !j.empty() && j[0].is_array(),
                  "matrix_from_json: expected an array of rows");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    detail::require(static_cast<int>(j[r].size()) == cols,
                    "matrix_from_json: ragged rows");
    for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

SourceSpec load_source(const json& j) {
  detail::require(j.contains("px_y1"), "source: missing field px_y1");
  detail::require(j.contains("py2_given_y1"),
                  "source: missing field py2_given_y1");
  JointSource src(matrix_from_json(j.at("px_y1")),
                  matrix_from_json(j.at("py2_given_y1")));
  DistortionMeasure d1 =
      j.contains("d1") ? DistortionMeasure(matrix_from_json(j.at("d1")))
                       : DistortionMeasure::hamming(src.x_size());
  DistortionMeasure d2 =
      j.contains("d2") ? DistortionMeasure(matrix_from_json(j.at("d2")))
                       : DistortionMeasure::hamming(src.x_size());
  return SourceSpec{std::move(src), std::move(d1), std::move(d2)};
}

std::string format_sig(double v, int digits) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

void write_frontier_csv(std::ostream& os, const regions::RegionFrontier& f,
                        bool deterministic) {
  if (!deterministic) {
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    os << "# generated_unix_ms="
       << std::chrono::duration_cast<std::chrono::milliseconds>(now).count()
       << "\n";
  }
  os << "r1,r_sum,bound_tag\n";
  for (const auto& p : f.points)
    os << format_sig(p.r1) << "," << format_sig(p.r_sum) << "," << f.bound_tag
       << "\n";
}

json aux_to_json(const regions::ScalableAux& aux) {
  json j;
  j["v_size"] = aux.v_size;
  j["w1_size"] = aux.w1_size;
  j["w2_size"] = aux.w2_size;
  j["rate_form"] =
      aux.form == regions::ScalableAux::RateForm::TripleForm ? "triple" : "pair";
  j["cond"] = matrix_to_json(aux.cond);
  json f1 = json::array(), f2 = json::array();
  for (int r = 0; r < aux.f1.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < aux.f1.cols(); ++c) row.push_back(aux.f1(r, c));
    f1.push_back(std::move(row));
  }
  for (int r = 0; r < aux.f2.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < aux.f2.cols(); ++c) row.push_back(aux.f2(r, c));
    f2.push_back(std::move(row));
  }
  j["f1"] = std::move(f1);
  j["f2"] = std::move(f2);
  return j;
}

json frontier_to_json(const regions::RegionFrontier& f) {
  json j;
  j["bound_tag"] = f.bound_tag;
  json pts = json::array();
  for (const auto& p : f.points) {
    json pj;
    pj["r1"] = p.r1;
    pj["r_sum"] = p.r_sum;
    pj["witness"] = aux_to_json(p.witness);
    pts.push_back(std::move(pj));
  }
  j["points"] = std::move(pts);
  return j;
}

}  // namespace siscale::io
