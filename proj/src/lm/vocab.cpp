// SPDX-License-Identifier: Apache-2.0

#include "diva/vocab.hpp"

#include <fstream>
#include <stdexcept>

#include "diva/tensor.hpp"

namespace diva::lm {

namespace {

std::vector<std::string> standard_tokens() {
    std::vector<std::string> t = {"<pad>", "<bos>", "<eos>", "<sep>", "<row>", "<col>", "<q>",
                                  "TSR",   "TCE",   "RCE",   "TCR",   "LQA"};
    for (char ch : Vocab::alphabet()) t.emplace_back(1, ch);
    for (int r = 1; r <= Vocab::kMaxCoord; ++r) t.push_back("R" + std::to_string(r));
    for (int c = 1; c <= Vocab::kMaxCoord; ++c) t.push_back("C" + std::to_string(c));
    return t;
}

}  // namespace

const std::string& Vocab::alphabet() {
    static const std::string a = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    return a;
}

const Vocab& Vocab::standard() {
    static const Vocab v(standard_tokens());
    return v;
}

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (!index_.emplace(tokens_[i], static_cast<int>(i)).second)
            throw ConfigError("duplicate vocab token: " + tokens_[i]);
    }
    auto need = [&](const char* tok) {
        auto it = index_.find(tok);
        if (it == index_.end()) throw ConfigError(std::string("vocab lacks required token ") + tok);
        return it->second;
    };
    pad_ = need("<pad>");
    bos_ = need("<bos>");
    eos_ = need("<eos>");
    sep_ = need("<sep>");
    row_ = need("<row>");
    col_ = need("<col>");
    query_ = need("<q>");
    first_row_tok_ = need("R1");
    first_col_tok_ = need("C1");
    first_symbol_ = need("A");
    for (int k = 1; k < kMaxCoord; ++k) {
        if (need(("R" + std::to_string(k + 1)).c_str()) != first_row_tok_ + k ||
            need(("C" + std::to_string(k + 1)).c_str()) != first_col_tok_ + k)
            throw ConfigError("coordinate tokens must be contiguous");
    }
    for (std::size_t k = 0; k < alphabet().size(); ++k)
        if (need(std::string(1, alphabet()[k]).c_str()) != first_symbol_ + static_cast<int>(k))
            throw ConfigError("cell alphabet tokens must be contiguous");
}

std::optional<int> Vocab::find(const std::string& token) const {
    auto it = index_.find(token);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

int Vocab::id(const std::string& token) const {
    auto it = index_.find(token);
    if (it == index_.end()) throw DimensionError("token not in vocab: '" + token + "'");
    return it->second;
}

const std::string& Vocab::token(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
        throw DimensionError("token id " + std::to_string(id) + " outside vocab of " +
                             std::to_string(tokens_.size()));
    return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocab::encode(std::span<const std::string> tokens) const {
    std::vector<int> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(id(t));
    return out;
}

std::vector<std::string> Vocab::decode(std::span<const int> ids) const {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (int i : ids) out.push_back(token(i));
    return out;
}

int Vocab::row_token(int r) const {
    if (r < 1 || r > kMaxCoord) throw DimensionError("row index " + std::to_string(r) + " outside 1.." + std::to_string(kMaxCoord));
    return first_row_tok_ + r - 1;
}

int Vocab::col_token(int c) const {
    if (c < 1 || c > kMaxCoord) throw DimensionError("column index " + std::to_string(c) + " outside 1.." + std::to_string(kMaxCoord));
    return first_col_tok_ + c - 1;
}

std::optional<int> Vocab::row_index(int id) const {
    if (id >= first_row_tok_ && id < first_row_tok_ + kMaxCoord) return id - first_row_tok_ + 1;
    return std::nullopt;
}

std::optional<int> Vocab::col_index(int id) const {
    if (id >= first_col_tok_ && id < first_col_tok_ + kMaxCoord) return id - first_col_tok_ + 1;
    return std::nullopt;
}

bool Vocab::is_symbol(int id) const {
    return id >= first_symbol_ && id < first_symbol_ + static_cast<int>(alphabet().size());
}

void Vocab::save(const std::filesystem::path& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write vocab to " + path.string());
    for (const auto& t : tokens_) f << t << '\n';
}

Vocab Vocab::load(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read vocab from " + path.string());
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) tokens.push_back(line);
    }
    return Vocab(std::move(tokens));
}

}  // namespace diva::lm
