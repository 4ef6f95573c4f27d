#pragma once

#include <string>
#include <vector>

#include "omnisonic/audio.hpp"
#include "omnisonic/tensor.hpp"

namespace omnisonic {

// ||muA - muB||^2 + tr(SA + SB - 2 (SA SB)^{1/2}), covariances with 1/(M-1).
// The product square root is evaluated in the symmetric PSD form
// sqrt(SA)^T SB sqrt(SA).
double frechet_distance(const TensorT<double>& a, const TensorT<double>& b);

// mean over pairs of KL(ref || gen), probabilities floored at 1e-10.
// Each row is one posterior; rows must sum to 1 within 1e-5.
double mean_kl(const TensorT<double>& refs, const TensorT<double>& gens);

// Levenshtein(ref, hyp) / len(ref) with unit costs.
double edit_error_rate(const std::vector<std::string>& ref, const std::vector<std::string>& hyp);
int levenshtein(const std::vector<std::string>& a, const std::vector<std::string>& b);

// 100 * mean pairwise cosine similarity over matched rows.
double cosine_alignment_score(const TensorT<double>& audio_feats,
                              const TensorT<double>& cond_feats);

// tokenizers feeding edit_error_rate at the three granularities
std::vector<std::string> tokenize_words(const std::string& text);
std::vector<std::string> tokenize_chars(const std::string& text);
// rule-based letter-to-sound-class map (vowels, stops, fricatives, ...)
std::vector<std::string> tokenize_phonemes(const std::string& text);

// Desk-scale embedder: per-band mean of the log-mel grid (D = n_mels).
std::vector<double> toy_features(const MelSpec& m);
// Softmax over the same band means: a K = n_mels class posterior.
std::vector<double> toy_posterior(const MelSpec& m);

}  // namespace omnisonic
