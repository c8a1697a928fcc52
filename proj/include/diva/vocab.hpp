// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace diva::lm {

// Dense token table. The standard table holds the cell alphabet (A-Z, 0-9 as
// single tokens), structural separators, coordinate tokens R1..R12 and
// C1..C12, task keywords and the control tokens.
class Vocab {
public:
    static constexpr int kMaxCoord = 12;

    static const Vocab& standard();
    explicit Vocab(std::vector<std::string> tokens);

    std::size_t size() const { return tokens_.size(); }
    int id(const std::string& token) const;
    std::optional<int> find(const std::string& token) const;
    const std::string& token(int id) const;
    std::vector<int> encode(std::span<const std::string> tokens) const;
    std::vector<std::string> decode(std::span<const int> ids) const;
    const std::vector<std::string>& tokens() const { return tokens_; }

    int pad() const { return pad_; }
    int bos() const { return bos_; }
    int eos() const { return eos_; }
    int sep() const { return sep_; }
    int row_sep() const { return row_; }
    int col_sep() const { return col_; }
    int query_sep() const { return query_; }

    // 1-based coordinate tokens.
    int row_token(int r) const;
    int col_token(int c) const;
    // Coordinate carried by a token, or nullopt when it is not one.
    std::optional<int> row_index(int id) const;
    std::optional<int> col_index(int id) const;

    static const std::string& alphabet();
    bool is_symbol(int id) const;

    void save(const std::filesystem::path& path) const;
    static Vocab load(const std::filesystem::path& path);

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
    int pad_ = -1, bos_ = -1, eos_ = -1, sep_ = -1, row_ = -1, col_ = -1, query_ = -1;
    int first_row_tok_ = -1, first_col_tok_ = -1, first_symbol_ = -1;
};

}  // namespace diva::lm
