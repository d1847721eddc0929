/*
 * Copyright 2026 The TaxoRAG Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "taxorag/prompts.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

#include "builtin_prompts.hpp"
#include "taxorag/errors.hpp"
#include "taxorag/hashing.hpp"

namespace taxorag {

namespace {

bool is_ident_char(char c) noexcept {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

// Length of an identifier starting at s[pos] and closed by `close`, or 0.
std::size_t ident_before(std::string_view s, std::size_t pos, std::string_view close) {
    std::size_t end = pos;
    while (end < s.size() && is_ident_char(s[end])) ++end;
    if (end == pos || s.substr(end, close.size()) != close) return 0;
    return end - pos;
}

const std::string* lookup(const PromptVars& vars, std::string_view name) {
    const auto it = vars.find(std::string(name));
    return it == vars.end() ? nullptr : &it->second;
}

void expand(std::string_view tmpl, const PromptVars& vars, const std::string& prompt_name, std::string& out) {
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl.substr(i, 3) == "{{#") {
            const std::size_t n = ident_before(tmpl, i + 3, "}}");
            if (n > 0) {
                const std::string_view name = tmpl.substr(i + 3, n);
                const std::string close = fmt::format("{{{{/{}}}}}", name);
                const std::size_t body_begin = i + 3 + n + 2;
                const std::size_t body_end = tmpl.find(close, body_begin);
                if (body_end == std::string_view::npos) {
                    throw InvalidInput(fmt::format("prompt '{}': unclosed section '{}'", prompt_name, name));
                }
                const std::string* v = lookup(vars, name);
                if (v != nullptr && !v->empty()) {
                    expand(tmpl.substr(body_begin, body_end - body_begin), vars, prompt_name, out);
                }
                i = body_end + close.size();
                continue;
            }
        }
        if (tmpl[i] == '{') {
            const std::size_t n = ident_before(tmpl, i + 1, "}");
            if (n > 0) {
                const std::string_view name = tmpl.substr(i + 1, n);
                const std::string* v = lookup(vars, name);
                if (v == nullptr) {
                    throw InvalidInput(fmt::format("prompt '{}': no value for '{{{}}}'", prompt_name, name));
                }
                out += *v;
                i += n + 2;
                continue;
            }
        }
        out += tmpl[i++];
    }
}

PromptTemplate make(std::string name, std::string text, std::size_t dots) {
    return PromptTemplate{std::move(name), std::move(text), dots};
}

std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError(fmt::format("cannot read prompt template {}", p.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

std::string PromptTemplate::render(const PromptVars& vars) const {
    std::string out;
    out.reserve(text.size() + thinking_dots + 256);
    expand(text, vars, name, out);
    out.append(thinking_dots, '.');
    return out;
}

std::string PromptTemplate::hash() const { return sha256_hex(fmt::format("{}\x1f{}", text, thinking_dots)); }

PromptSet PromptSet::builtin(std::size_t thinking_dots) {
    namespace b = builtin_prompts;
    return PromptSet{
        make("contextualize", b::kContextualize, thinking_dots),
        make("caption", b::kCaption, thinking_dots),
        make("respond", b::kRespond, thinking_dots),
        make("multiquery", b::kMultiquery, 0),
        make("claims", b::kClaims, 0),
        make("verdict", b::kVerdict, 0),
        make("questions", b::kQuestions, 0),
    };
}

PromptSet PromptSet::load(const std::filesystem::path& dir, std::size_t thinking_dots,
                          const std::map<std::string, std::filesystem::path>& overrides) {
    PromptSet set = builtin(thinking_dots);
    for (PromptTemplate* t : {&set.contextualize, &set.caption, &set.respond, &set.multiquery, &set.claims,
                              &set.verdict, &set.questions}) {
        if (const auto it = overrides.find(t->name); it != overrides.end()) {
            t->text = read_text(it->second);
            continue;
        }
        const auto path = dir / (t->name + ".txt");
        if (!dir.empty() && std::filesystem::exists(path)) t->text = read_text(path);
    }
    return set;
}

std::map<std::string, std::string> PromptSet::hashes() const {
    std::map<std::string, std::string> out;
    for (const PromptTemplate* t : {&contextualize, &caption, &respond, &multiquery, &claims, &verdict, &questions}) {
        out.emplace(t->name, t->hash());
    }
    return out;
}

}  // namespace taxorag
