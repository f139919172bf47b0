#include "splat6d/transfer_function.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "splat6d/error.hpp"
#include "tf_presets.hpp"

namespace splat6d {

void TransferFunction::validate() const {
    if (points.empty()) throw Error(ErrorCode::InvalidParameter, "transfer function has no points");
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        if (i > 0 && !(p.hu > points[i - 1].hu)) {
            throw Error(ErrorCode::InvalidParameter, "transfer function HU not strictly increasing");
        }
        for (int c = 0; c < 3; ++c) {
            if (!(p.rgba[c] >= 0.0 && p.rgba[c] <= 255.0)) {
                throw Error(ErrorCode::InvalidParameter, "transfer function color outside 0..255");
            }
        }
        if (!(p.rgba[3] >= 0.0 && p.rgba[3] <= 1.0)) {
            throw Error(ErrorCode::InvalidParameter, "transfer function alpha outside 0..1");
        }
    }
}

Rgba TransferFunction::eval(double hu) const {
    if (hu <= points.front().hu) return points.front().rgba;
    if (hu >= points.back().hu) return points.back().rgba;
    // First point with p.hu > hu; the segment is [it - 1, it).
    const auto it = std::upper_bound(points.begin(), points.end(), hu,
                                     [](double h, const TfPoint& p) { return h < p.hu; });
    const TfPoint& a = *(it - 1);
    const TfPoint& b = *it;
    if (hu == a.hu) return a.rgba;
    const double t = (hu - a.hu) / (b.hu - a.hu);
    Rgba out;
    for (int c = 0; c < 4; ++c) out[c] = a.rgba[c] + (b.rgba[c] - a.rgba[c]) * t;
    return out;
}

TransferFunctionSet parse_transfer_functions(std::string_view text) {
    TransferFunctionSet set;
    std::array<bool, kNumGroups> seen{};
    int current = -1;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string head;
        if (!(ls >> head)) continue;
        auto fail = [&](const std::string& why) {
            throw Error(ErrorCode::MalformedFile,
                        "transfer functions line " + std::to_string(line_no) + ": " + why);
        };
        if (head == "name") {
            ls >> set.name;
        } else if (head == "group") {
            if (!(ls >> current) || current < 0 || current >= kNumGroups) fail("bad group index");
            if (seen[static_cast<std::size_t>(current)]) fail("duplicate group");
            seen[static_cast<std::size_t>(current)] = true;
        } else {
            if (current < 0) fail("point before any group header");
            TfPoint p;
            std::istringstream row(line);
            if (!(row >> p.hu >> p.rgba[0] >> p.rgba[1] >> p.rgba[2] >> p.rgba[3])) {
                fail("expected 'hu r g b a'");
            }
            std::string rest;
            if (row >> rest) fail("trailing tokens");
            set.groups[static_cast<std::size_t>(current)].points.push_back(p);
        }
    }
    for (int g = 0; g < kNumGroups; ++g) {
        if (!seen[static_cast<std::size_t>(g)]) {
            throw Error(ErrorCode::MalformedFile, "missing group " + std::to_string(g));
        }
        try {
            set.groups[static_cast<std::size_t>(g)].validate();
        } catch (const Error& e) {
            throw Error(ErrorCode::MalformedFile, "group " + std::to_string(g) + ": " + e.what());
        }
    }
    return set;
}

std::string format_transfer_functions(const TransferFunctionSet& set) {
    std::ostringstream out;
    out.precision(17);
    if (!set.name.empty()) out << "name " << set.name << "\n";
    for (int g = 0; g < kNumGroups; ++g) {
        out << "group " << g << "\n";
        for (const auto& p : set[g].points) {
            out << p.hu << ' ' << p.rgba[0] << ' ' << p.rgba[1] << ' ' << p.rgba[2] << ' '
                << p.rgba[3] << "\n";
        }
    }
    return out.str();
}

TransferFunctionSet load_transfer_functions(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_transfer_functions(buf.str());
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"seen_tf", "unseen_tf"};
    return names;
}

const TransferFunctionSet& builtin_preset(std::string_view name) {
    static const TransferFunctionSet seen = parse_transfer_functions(detail::kSeenTfText);
    static const TransferFunctionSet unseen = parse_transfer_functions(detail::kUnseenTfText);
    if (name == "seen_tf") return seen;
    if (name == "unseen_tf") return unseen;
    throw Error(ErrorCode::InvalidParameter, "unknown transfer-function preset '" + std::string(name) + "'");
}

TransferFunctionSet resolve_transfer_functions(const std::string& name_or_path) {
    if (std::find(preset_names().begin(), preset_names().end(), name_or_path) != preset_names().end()) {
        return builtin_preset(name_or_path);
    }
    return load_transfer_functions(name_or_path);
}

}  // namespace splat6d
