// SPDX-License-Identifier: Apache-2.0
//
// Loader for the hand-labeled reward fixtures shared by the unit and
// acceptance suites.
#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcsc/response.hpp"

namespace golden {

struct Case {
    int line = 0;
    bool hcr = false;
    int label = 0;                          // scdr
    mcsc::Verdict truth = mcsc::Verdict::Tie;  // hcr
    mcsc::TokenSeq a, b;
    double e0 = 0, e1 = 0, e2 = 0;  // expected reward components, fixture order
};

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline std::vector<std::string> split(const std::string& s, const std::string& sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (auto pos = s.find(sep); pos != std::string::npos; pos = s.find(sep, start)) {
        out.push_back(trim(s.substr(start, pos - start)));
        start = pos + sep.size();
    }
    out.push_back(trim(s.substr(start)));
    return out;
}

inline mcsc::Verdict parse_verdict(const std::string& s) {
    if (s == "A") return mcsc::Verdict::A;
    if (s == "B") return mcsc::Verdict::B;
    if (s == "TIE") return mcsc::Verdict::Tie;
    throw std::runtime_error("bad verdict " + s);
}

inline std::vector<Case> load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open fixture " + path);
    std::vector<Case> cases;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        const auto t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        // "||" separates the two hcr responses, so split fields on " | " only
        const auto f = split(t, " | ");
        if (f.size() != 4) throw std::runtime_error("fixture line " + std::to_string(n) + ": expected 4 fields");
        Case c;
        c.line = n;
        c.hcr = f[0] == "hcr";
        if (c.hcr) {
            c.truth = parse_verdict(f[1]);
            const auto seqs = split(f[2], "||");
            if (seqs.size() != 2) throw std::runtime_error("fixture line " + std::to_string(n) + ": expected a || b");
            c.a = mcsc::from_text(seqs[0]);
            c.b = mcsc::from_text(seqs[1]);
        } else {
            c.label = std::stoi(f[1]);
            c.a = mcsc::from_text(f[2]);
        }
        std::istringstream exp(f[3]);
        if (!(exp >> c.e0 >> c.e1 >> c.e2)) throw std::runtime_error("fixture line " + std::to_string(n) + ": bad expectation");
        cases.push_back(std::move(c));
    }
    return cases;
}

}  // namespace golden
