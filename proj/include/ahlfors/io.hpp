#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "ahlfors/asymptotics.hpp"
#include "ahlfors/counting.hpp"
#include "ahlfors/geometry.hpp"
#include "ahlfors/stree.hpp"
#include "ahlfors/symbolic.hpp"
#include "json.hpp"

namespace ahlfors::io {

using json = nlohmann::ordered_json;

// Loaders raise InputError on unreadable files or malformed documents.
json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
std::string dump(const json& j);  // two-space indent, trailing newline

// {"alphabet": N, "transition": [[0|1,...],...]}; a missing matrix means the full shift
symbolic::SubshiftFT shift_from_json(const json& doc);
json to_json(const symbolic::SubshiftFT& shift);
// {"depth": k, "values": {"word": real, ...}}
symbolic::LocallyConstantPotential potential_from_json(const json& p, const symbolic::SubshiftFT& shift);
json to_json(const symbolic::LocallyConstantPotential& f);

// {"maps": [{"ratio", "rotation" | "angle", "translation"}], "witness": [{"box": {"lo","hi"}} | {"ball": {"center","radius"}}]}
geometry::Ifs ifs_from_json(const json& j);
json to_json(const geometry::Ifs& ifs);
// {"kind": "affine" | "inversion" | "mobius", ...}
geometry::ConformalMap map_from_json(const json& j);
json to_json(const geometry::ConformalMap& m);

// Top-level document with the shift keys plus "potential", optional "weight",
// "kernel" and "anchor".
symbolic::RenewalSpec renewal_from_json(const json& doc);

// Header `dim=<d> delta=<float> n=<count>`, then one point per line.
void write_cloud(std::ostream& os, const geometry::PointCloud& cloud);
geometry::PointCloud read_cloud(std::istream& is);
void write_cloud_file(const std::string& path, const geometry::PointCloud& cloud);
geometry::PointCloud read_cloud_file(const std::string& path);

struct CurveFile {
    asymptotics::CountingCurve curve;
    double s = 0.0;
};

// function,epsilon,value,eps_pow_s_value,s; rows by decreasing epsilon
void write_curve(std::ostream& os, const asymptotics::CountingCurve& curve, double s);
CurveFile read_curve(std::istream& is);
CurveFile read_curve_file(const std::string& path);

json to_json(const stree::STree& tree);
stree::STree tree_from_json(const json& j);

json to_json(const stree::AxiomReport& rep, std::size_t alphabet_size);
json to_json(const counting::AxiomSuiteReport& rep);
json to_json(const geometry::OscReport& rep);
json to_json(const asymptotics::DimensionFit& fit);
json to_json(const asymptotics::LimitDiagnostic& d);
json to_json(const symbolic::RenewalSeries& s);

std::string format_double(double v);  // 17 significant digits

}  // namespace ahlfors::io
