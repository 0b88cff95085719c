// SPDX-License-Identifier: Apache-2.0
//
// Token language for reward-model responses.
//
// Single-dimension responses:
//     <think> (EVID_k | FILLER_i)* </think> <answer> RATE_k </answer>
// with at least one EVID inside <think>.
//
// Hierarchical responses:
//     ( <dim> DIM_d (EVID_k | FILLER_i)* RATE_k </dim> ){1..D} PREFER_v
// with at least one EVID per block and distinct DIM_d across blocks.
//
// Textual form is whitespace-separated token names, e.g.
//     <think> EVID_3 </think> <answer> RATE_3 </answer>
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mcsc/world.hpp"

namespace mcsc {

enum class TokenKind {
    OpenThink,
    CloseThink,
    OpenAnswer,
    CloseAnswer,
    OpenDim,
    CloseDim,
    DimMark,  ///< value: dimension index
    Evid,     ///< value: rating the evidence points to
    Rate,     ///< value: rating
    Prefer,   ///< value: static_cast<int>(Verdict)
    Filler,   ///< value: filler id
};

struct Token {
    TokenKind kind = TokenKind::Filler;
    int value = 0;

    bool operator==(const Token&) const = default;

    static constexpr Token open_think() { return {TokenKind::OpenThink, 0}; }
    static constexpr Token close_think() { return {TokenKind::CloseThink, 0}; }
    static constexpr Token open_answer() { return {TokenKind::OpenAnswer, 0}; }
    static constexpr Token close_answer() { return {TokenKind::CloseAnswer, 0}; }
    static constexpr Token open_dim() { return {TokenKind::OpenDim, 0}; }
    static constexpr Token close_dim() { return {TokenKind::CloseDim, 0}; }
    static constexpr Token dim(int d) { return {TokenKind::DimMark, d}; }
    static constexpr Token evid(int k) { return {TokenKind::Evid, k}; }
    static constexpr Token rate(int k) { return {TokenKind::Rate, k}; }
    static constexpr Token prefer(Verdict v) { return {TokenKind::Prefer, static_cast<int>(v)}; }
    static constexpr Token filler(int id) { return {TokenKind::Filler, id}; }
};

using TokenSeq = std::vector<Token>;

inline constexpr int kDefaultMaxLength = 32;
inline constexpr int kDefaultFillers = 2;

/// Vocabulary bounds shared by parsers, renderers and the policy.
struct FormatLimits {
    int n_dims = kDefaultDims;
    int rating_levels = 5;
    int max_length = kDefaultMaxLength;
    int n_fillers = kDefaultFillers;

    /// True iff the token's value lies inside the vocabulary.
    bool in_vocabulary(const Token& t) const;
};

struct FormatError {
    std::size_t position = 0;
    std::string reason;
};

struct ParsedScdr {
    std::vector<int> evidence;  ///< EVID ratings in order; fillers dropped
    int answer = 1;

    bool operator==(const ParsedScdr&) const = default;
};

struct DimBlock {
    int dim = 0;
    std::vector<int> evidence;
    int verdict = 1;  ///< per-dimension RATE

    bool operator==(const DimBlock&) const = default;
};

struct ParsedHcr {
    std::vector<DimBlock> blocks;
    Verdict final_verdict = Verdict::A;

    bool operator==(const ParsedHcr&) const = default;
};

template <typename T>
using ParseResult = std::variant<T, FormatError>;

template <typename T>
bool parse_ok(const ParseResult<T>& r) {
    return std::holds_alternative<T>(r);
}

ParseResult<ParsedScdr> parse_scdr(const TokenSeq& seq, const FormatLimits& limits = {});
ParseResult<ParsedHcr> parse_hcr(const TokenSeq& seq, const FormatLimits& limits = {});

/// r_format: 1 iff parse_scdr succeeds.
int format_score_scdr(const TokenSeq& seq, const FormatLimits& limits = {});
/// Whole-response format indicator for pairwise responses: 1 iff parse_hcr
/// succeeds, i.e. scaffold and every block well-formed.
int format_score_hcr(const TokenSeq& seq, const FormatLimits& limits = {});

/// r_hier: 1 iff the outer hierarchical scaffold is valid. The scaffold is one
/// or more bracketed <dim> blocks, each led by a DIM mark, marks pairwise
/// distinct, at most D blocks, nothing between blocks, and exactly one final
/// PREFER. Block contents beyond the leading mark are not checked here.
int hier_format_score(const TokenSeq& seq, const FormatLimits& limits = {});

/// r_dim: (1/D) * number of dims d having exactly one internally well-formed
/// block. Blocks are located by bracket scanning even when the scaffold is
/// broken; missing dims contribute zero.
double dim_format_score(const TokenSeq& seq, const FormatLimits& limits = {});

/// Canonical serialisations; parse(render(p)) == p.
TokenSeq render(const ParsedScdr& parsed);
TokenSeq render(const ParsedHcr& parsed);

std::string token_name(const Token& t);
std::string to_text(const TokenSeq& seq);
/// Parses the textual encoding; throws InputError on any unknown token name.
TokenSeq from_text(std::string_view text);

}  // namespace mcsc
