// SPDX-License-Identifier: Apache-2.0
#include "mcsc/response.hpp"

#include <charconv>
#include <set>

#include "mcsc/errors.hpp"

namespace mcsc {

bool FormatLimits::in_vocabulary(const Token& t) const {
    switch (t.kind) {
        case TokenKind::DimMark: return t.value >= 0 && t.value < n_dims;
        case TokenKind::Evid:
        case TokenKind::Rate: return t.value >= 1 && t.value <= rating_levels;
        case TokenKind::Prefer: return t.value >= 0 && t.value <= 2;
        case TokenKind::Filler: return t.value >= 0 && t.value < n_fillers;
        default: return true;
    }
}

namespace {

FormatError fail(std::size_t pos, std::string reason) { return FormatError{pos, std::move(reason)}; }

std::optional<FormatError> check_common(const TokenSeq& seq, const FormatLimits& limits) {
    if (static_cast<int>(seq.size()) > limits.max_length) {
        return fail(static_cast<std::size_t>(limits.max_length), "sequence longer than max length");
    }
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (!limits.in_vocabulary(seq[i])) return fail(i, "token value outside vocabulary");
    }
    return std::nullopt;
}

bool is(const TokenSeq& seq, std::size_t i, TokenKind kind) { return i < seq.size() && seq[i].kind == kind; }

/// Parses one `<dim> DIM (EVID|FILLER)* RATE </dim>` block starting at `pos`.
/// On success advances `pos` past </dim>.
ParseResult<DimBlock> parse_block(const TokenSeq& seq, std::size_t& pos) {
    std::size_t i = pos;
    if (!is(seq, i, TokenKind::OpenDim)) return fail(i, "expected <dim>");
    ++i;
    if (!is(seq, i, TokenKind::DimMark)) return fail(i, "expected DIM mark after <dim>");
    DimBlock block;
    block.dim = seq[i].value;
    ++i;
    while (is(seq, i, TokenKind::Evid) || is(seq, i, TokenKind::Filler)) {
        if (seq[i].kind == TokenKind::Evid) block.evidence.push_back(seq[i].value);
        ++i;
    }
    if (block.evidence.empty()) return fail(i, "dim block has no evidence");
    if (!is(seq, i, TokenKind::Rate)) return fail(i, "expected RATE in dim block");
    block.verdict = seq[i].value;
    ++i;
    if (!is(seq, i, TokenKind::CloseDim)) return fail(i, "expected </dim>");
    pos = i + 1;
    return block;
}

}  // namespace

ParseResult<ParsedScdr> parse_scdr(const TokenSeq& seq, const FormatLimits& limits) {
    if (auto err = check_common(seq, limits)) return *err;
    std::size_t i = 0;
    if (!is(seq, i, TokenKind::OpenThink)) return fail(i, "expected <think>");
    ++i;
    ParsedScdr out;
    while (is(seq, i, TokenKind::Evid) || is(seq, i, TokenKind::Filler)) {
        if (seq[i].kind == TokenKind::Evid) out.evidence.push_back(seq[i].value);
        ++i;
    }
    if (out.evidence.empty()) return fail(i, "reasoning contains no evidence");
    if (!is(seq, i, TokenKind::CloseThink)) return fail(i, "expected </think>");
    ++i;
    if (!is(seq, i, TokenKind::OpenAnswer)) return fail(i, "expected <answer>");
    ++i;
    if (!is(seq, i, TokenKind::Rate)) return fail(i, "expected RATE in answer");
    out.answer = seq[i].value;
    ++i;
    if (!is(seq, i, TokenKind::CloseAnswer)) return fail(i, "expected </answer>");
    ++i;
    if (i != seq.size()) return fail(i, "trailing tokens after </answer>");
    return out;
}

ParseResult<ParsedHcr> parse_hcr(const TokenSeq& seq, const FormatLimits& limits) {
    if (auto err = check_common(seq, limits)) return *err;
    ParsedHcr out;
    std::set<int> seen;
    std::size_t i = 0;
    while (is(seq, i, TokenKind::OpenDim)) {
        const std::size_t start = i;
        auto block = parse_block(seq, i);
        if (auto* e = std::get_if<FormatError>(&block)) return *e;
        auto& b = std::get<DimBlock>(block);
        if (!seen.insert(b.dim).second) return fail(start + 1, "duplicate dimension block");
        out.blocks.push_back(std::move(b));
    }
    if (out.blocks.empty()) return fail(i, "expected at least one <dim> block");
    if (static_cast<int>(out.blocks.size()) > limits.n_dims) return fail(i, "more blocks than dimensions");
    if (!is(seq, i, TokenKind::Prefer)) return fail(i, "expected final PREFER verdict");
    out.final_verdict = static_cast<Verdict>(seq[i].value);
    ++i;
    if (i != seq.size()) return fail(i, "trailing tokens after final verdict");
    return out;
}

int format_score_scdr(const TokenSeq& seq, const FormatLimits& limits) {
    return parse_ok(parse_scdr(seq, limits)) ? 1 : 0;
}

int format_score_hcr(const TokenSeq& seq, const FormatLimits& limits) {
    return parse_ok(parse_hcr(seq, limits)) ? 1 : 0;
}

int hier_format_score(const TokenSeq& seq, const FormatLimits& limits) {
    if (check_common(seq, limits)) return 0;
    std::set<int> seen;
    std::size_t i = 0;
    int blocks = 0;
    while (is(seq, i, TokenKind::OpenDim)) {
        ++i;
        if (!is(seq, i, TokenKind::DimMark) || !seen.insert(seq[i].value).second) return 0;
        ++i;
        while (i < seq.size() && seq[i].kind != TokenKind::CloseDim) {
            const auto k = seq[i].kind;
            // block bodies may be malformed, but may not open another scaffold element
            if (k == TokenKind::OpenDim || k == TokenKind::Prefer) return 0;
            ++i;
        }
        if (i == seq.size()) return 0;
        ++i;  // </dim>
        ++blocks;
    }
    if (blocks == 0 || blocks > limits.n_dims) return 0;
    if (!is(seq, i, TokenKind::Prefer) || i + 1 != seq.size()) return 0;
    return 1;
}

double dim_format_score(const TokenSeq& seq, const FormatLimits& limits) {
    if (check_common(seq, limits)) return 0.0;
    std::vector<int> valid(static_cast<std::size_t>(limits.n_dims), 0);
    std::vector<int> seen(static_cast<std::size_t>(limits.n_dims), 0);
    std::size_t i = 0;
    while (i < seq.size()) {
        if (seq[i].kind != TokenKind::OpenDim) {
            ++i;
            continue;
        }
        // locate the extent of this block: up to </dim> or the next <dim>
        std::size_t end = i + 1;
        while (end < seq.size() && seq[end].kind != TokenKind::CloseDim && seq[end].kind != TokenKind::OpenDim) {
            ++end;
        }
        if (i + 1 < seq.size() && seq[i + 1].kind == TokenKind::DimMark) {
            const auto d = static_cast<std::size_t>(seq[i + 1].value);
            ++seen[d];
            std::size_t pos = i;
            auto block = parse_block(seq, pos);
            if (parse_ok(block) && pos == end + 1) valid[d] = 1;
        }
        i = (end < seq.size() && seq[end].kind == TokenKind::CloseDim) ? end + 1 : end;
    }
    int count = 0;
    for (std::size_t d = 0; d < valid.size(); ++d) {
        if (valid[d] && seen[d] == 1) ++count;
    }
    return static_cast<double>(count) / limits.n_dims;
}

TokenSeq render(const ParsedScdr& parsed) {
    TokenSeq seq;
    seq.push_back(Token::open_think());
    for (int k : parsed.evidence) seq.push_back(Token::evid(k));
    seq.push_back(Token::close_think());
    seq.push_back(Token::open_answer());
    seq.push_back(Token::rate(parsed.answer));
    seq.push_back(Token::close_answer());
    return seq;
}

TokenSeq render(const ParsedHcr& parsed) {
    TokenSeq seq;
    for (const auto& b : parsed.blocks) {
        seq.push_back(Token::open_dim());
        seq.push_back(Token::dim(b.dim));
        for (int k : b.evidence) seq.push_back(Token::evid(k));
        seq.push_back(Token::rate(b.verdict));
        seq.push_back(Token::close_dim());
    }
    seq.push_back(Token::prefer(parsed.final_verdict));
    return seq;
}

std::string token_name(const Token& t) {
    switch (t.kind) {
        case TokenKind::OpenThink: return "<think>";
        case TokenKind::CloseThink: return "</think>";
        case TokenKind::OpenAnswer: return "<answer>";
        case TokenKind::CloseAnswer: return "</answer>";
        case TokenKind::OpenDim: return "<dim>";
        case TokenKind::CloseDim: return "</dim>";
        case TokenKind::DimMark: return "DIM_" + std::to_string(t.value);
        case TokenKind::Evid: return "EVID_" + std::to_string(t.value);
        case TokenKind::Rate: return "RATE_" + std::to_string(t.value);
        case TokenKind::Prefer: return "PREFER_" + std::string(verdict_name(static_cast<Verdict>(t.value)));
        case TokenKind::Filler: return "FILLER_" + std::to_string(t.value);
    }
    return "?";
}

std::string to_text(const TokenSeq& seq) {
    std::string out;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (i) out += ' ';
        out += token_name(seq[i]);
    }
    return out;
}

namespace {

bool parse_int(std::string_view s, int& out) {
    if (s.empty()) return false;
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size() && out >= 0;
}

Token token_from_name(std::string_view name) {
    if (name == "<think>") return Token::open_think();
    if (name == "</think>") return Token::close_think();
    if (name == "<answer>") return Token::open_answer();
    if (name == "</answer>") return Token::close_answer();
    if (name == "<dim>") return Token::open_dim();
    if (name == "</dim>") return Token::close_dim();
    if (name == "PREFER_A") return Token::prefer(Verdict::A);
    if (name == "PREFER_B") return Token::prefer(Verdict::B);
    if (name == "PREFER_TIE") return Token::prefer(Verdict::Tie);
    struct Prefix {
        std::string_view text;
        TokenKind kind;
    };
    static constexpr Prefix prefixes[] = {{"DIM_", TokenKind::DimMark},
                                          {"EVID_", TokenKind::Evid},
                                          {"RATE_", TokenKind::Rate},
                                          {"FILLER_", TokenKind::Filler}};
    for (const auto& p : prefixes) {
        if (name.starts_with(p.text)) {
            int value = 0;
            if (parse_int(name.substr(p.text.size()), value)) return Token{p.kind, value};
        }
    }
    throw InputError("unknown token '" + std::string(name) + "'");
}

}  // namespace

TokenSeq from_text(std::string_view text) {
    TokenSeq seq;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\n' || text[i] == '\r')) ++i;
        if (i == text.size()) break;
        std::size_t j = i;
        while (j < text.size() && !(text[j] == ' ' || text[j] == '\t' || text[j] == '\n' || text[j] == '\r')) ++j;
        seq.push_back(token_from_name(text.substr(i, j - i)));
        i = j;
    }
    return seq;
}

}  // namespace mcsc
