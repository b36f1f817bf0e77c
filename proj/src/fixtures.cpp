#include "condmom/fixtures.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace condmom {

namespace {

double parse_real(const std::string& tok, int line_no) {
    auto parse_plain = [&](const std::string& s) {
        double out = 0.0;
        auto res = std::from_chars(s.data(), s.data() + s.size(), out);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(out))
            throw ParseError("fixture line " + std::to_string(line_no) + ": bad number '" + tok +
                             "'");
        return out;
    };
    const auto slash = tok.find('/');
    if (slash == std::string::npos)
        return parse_plain(tok);
    const double num = parse_plain(tok.substr(0, slash));
    const double den = parse_plain(tok.substr(slash + 1));
    if (den == 0.0)
        throw ParseError("fixture line " + std::to_string(line_no) + ": zero denominator");
    return num / den;
}

} // namespace

LabeledSpace load_fixture(std::istream& in) {
    std::vector<std::string> ids, zlabels;
    std::vector<double> probs, xs, ys;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream fields(line);
        std::string id, prob, x, y, z;
        if (!(fields >> id))
            continue; // blank line
        if (!(fields >> prob >> x >> y >> z))
            throw ParseError("fixture line " + std::to_string(line_no) +
                             ": expected 'id prob X Y Z'");
        std::string extra;
        if (fields >> extra)
            throw ParseError("fixture line " + std::to_string(line_no) + ": trailing field '" +
                             extra + "'");
        ids.push_back(id);
        probs.push_back(parse_real(prob, line_no));
        xs.push_back(parse_real(x, line_no));
        ys.push_back(parse_real(y, line_no));
        zlabels.push_back(z);
    }
    if (ids.empty())
        throw ParseError("fixture: no outcome lines");
    return LabeledSpace{FiniteSpace(std::move(ids), std::move(probs)),
                        RandomMap::real(std::move(xs)), RandomMap::real(std::move(ys)),
                        RandomMap::labels(std::move(zlabels))};
}

LabeledSpace load_fixture_string(const std::string& text) {
    std::istringstream in(text);
    return load_fixture(in);
}

LabeledSpace load_fixture_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("fixture: cannot open '" + path + "'");
    return load_fixture(in);
}

namespace {

const std::map<std::string, std::string>& builtin_texts() {
    static const std::map<std::string, std::string> texts = {
        {"remark3",
         "# three equiprobable points; X = [w = 0], Y = w, Z constant\n"
         "m1  1/3  0  -1  u\n"
         "z0  1/3  1   0  u\n"
         "p1  1/3  0   1  u\n"},
        {"remark3_z",
         "# remark3 space with a two-letter Z: Z(0) = Z(1) = a, Z(-1) = b\n"
         "m1  1/3  0  -1  b\n"
         "z0  1/3  1   0  a\n"
         "p1  1/3  0   1  a\n"},
        {"four_point",
         "# four equiprobable points; X = [w <= 2], Y = w, Z constant\n"
         "w1  1/4  1  1  c\n"
         "w2  1/4  1  2  c\n"
         "w3  1/4  0  3  c\n"
         "w4  1/4  0  4  c\n"},
    };
    return texts;
}

} // namespace

std::vector<std::string> builtin_fixture_names() {
    std::vector<std::string> names;
    for (const auto& [name, text] : builtin_texts())
        names.push_back(name);
    return names;
}

bool is_builtin_fixture(const std::string& name) {
    return builtin_texts().count(name) > 0;
}

const std::string& builtin_fixture_text(const std::string& name) {
    auto it = builtin_texts().find(name);
    if (it == builtin_texts().end())
        throw std::invalid_argument("unknown builtin fixture '" + name + "'");
    return it->second;
}

LabeledSpace builtin_fixture(const std::string& name) {
    return load_fixture_string(builtin_fixture_text(name));
}

} // namespace condmom
