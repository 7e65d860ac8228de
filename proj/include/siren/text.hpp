#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "siren/errors.hpp"

namespace siren {

// Transcript comparison rule: lowercase, collapse whitespace runs, trim.
// Nothing else (no punctuation stripping).
inline std::string normalize_transcript(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!out.empty()) pending_space = true;
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

inline bool transcripts_match(std::string_view a, std::string_view b) {
    return normalize_transcript(a) == normalize_transcript(b);
}

inline std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::string cur;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) {
                words.push_back(cur);
                cur.clear();
            }
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) words.push_back(cur);
    return words;
}

// Character vocabulary shared by the in-repo CTC recognizers:
// a..z -> 0..25, space -> 26, blank -> 27.
struct CharVocab {
    static constexpr int kSpace = 26;
    static constexpr int kBlank = 27;
    static constexpr int kSize = 28;  // incl. blank

    static std::vector<int> tokenize(std::string_view target) {
        std::string norm = normalize_transcript(target);
        std::vector<int> out;
        out.reserve(norm.size());
        for (char c : norm) {
            if (c == ' ') {
                out.push_back(kSpace);
            } else if (c >= 'a' && c <= 'z') {
                out.push_back(c - 'a');
            } else {
                fail(ErrorCode::UntokenizableTarget,
                     std::string("token outside vocabulary: '") + c + "'");
            }
        }
        return out;
    }

    static char to_char(int token) {
        if (token == kSpace) return ' ';
        return static_cast<char>('a' + token);
    }

    static std::string to_string(const std::vector<int>& tokens) {
        std::string s;
        s.reserve(tokens.size());
        for (int t : tokens) s.push_back(to_char(t));
        return s;
    }
};

}  // namespace siren
