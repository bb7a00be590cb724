#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "siscale/probcore.hpp"
#include "siscale/regions.hpp"

// JSON instance schemas and CSV/JSON artifact writers. All floating-point
// CSV values print with 12 significant digits so regression diffs are
// meaningful; the optional timestamp header is suppressed in deterministic
// mode.
namespace siscale::io {

struct SourceSpec {
  JointSource src;
  DistortionMeasure d1;
  DistortionMeasure d2;
};

// Schema: {"px_y1": [[...]], "py2_given_y1": [[...]], "d1": [[...]],
//          "d2": [[...]]}. d1/d2 default to Hamming when omitted.
SourceSpec load_source(const nlohmann::json& j);

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);

std::string format_sig(double v, int digits = 12);

void write_frontier_csv(std::ostream& os, const regions::RegionFrontier& f,
                        bool deterministic);
nlohmann::json frontier_to_json(const regions::RegionFrontier& f);

nlohmann::json aux_to_json(const regions::ScalableAux& aux);

}  // namespace siscale::io
