#include "omnisonic/evalmetrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "omnisonic/linalg.hpp"

namespace omnisonic {

namespace {

std::vector<double> column_means(const TensorT<double>& x) {
    const int M = x.rows(), D = x.cols();
    std::vector<double> mu(D, 0.0);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < D; ++j) mu[j] += x.at(i, j);
    for (double& v : mu) v /= M;
    return mu;
}

TensorT<double> covariance(const TensorT<double>& x, const std::vector<double>& mu) {
    const int M = x.rows(), D = x.cols();
    TensorT<double> s({D, D});
    for (int i = 0; i < M; ++i) {
        for (int a = 0; a < D; ++a) {
            const double da = x.at(i, a) - mu[a];
            for (int b = 0; b < D; ++b) s.at(a, b) += da * (x.at(i, b) - mu[b]);
        }
    }
    for (auto& v : s.data) v /= (M - 1);
    return s;
}

}  // namespace

double frechet_distance(const TensorT<double>& a, const TensorT<double>& b) {
    if (a.cols() != b.cols()) fail("frechet_distance: dimension mismatch");
    if (a.rows() < 2 || b.rows() < 2) fail("frechet_distance: need at least 2 samples per set");
    const int D = a.cols();
    const std::vector<double> mu_a = column_means(a), mu_b = column_means(b);
    const TensorT<double> sa = covariance(a, mu_a), sb = covariance(b, mu_b);

    double mean_term = 0.0;
    for (int j = 0; j < D; ++j) {
        const double d = mu_a[j] - mu_b[j];
        mean_term += d * d;
    }

    const TensorT<double> ra = matrix_sqrt_psd(sa);
    // ra * sb * ra is symmetric PSD and shares eigenvalues with sa*sb
    TensorT<double> inner({D, D});
    {
        TensorT<double> tmp = matmul_plain(ra, sb);
        inner = matmul_plain(tmp, ra);
        for (int i = 0; i < D; ++i)
            for (int j = i + 1; j < D; ++j) {
                const double v = 0.5 * (inner.at(i, j) + inner.at(j, i));
                inner.at(i, j) = inner.at(j, i) = v;
            }
    }
    const TensorT<double> rs = matrix_sqrt_psd(inner);
    double trace_term = 0.0;
    for (int i = 0; i < D; ++i) trace_term += sa.at(i, i) + sb.at(i, i) - 2.0 * rs.at(i, i);
    return mean_term + trace_term;
}

double mean_kl(const TensorT<double>& refs, const TensorT<double>& gens) {
    if (!refs.same_shape(gens)) fail("mean_kl: paired lists must match in shape");
    const int M = refs.rows(), K = refs.cols();
    constexpr double eps = 1e-10;
    double total = 0.0;
    for (int i = 0; i < M; ++i) {
        double sp = 0.0, sq = 0.0;
        for (int k = 0; k < K; ++k) {
            sp += refs.at(i, k);
            sq += gens.at(i, k);
        }
        if (std::abs(sp - 1.0) > 1e-5 || std::abs(sq - 1.0) > 1e-5)
            fail("mean_kl: posterior rows must sum to 1");
        double kl = 0.0;
        for (int k = 0; k < K; ++k) {
            const double p = std::max(refs.at(i, k), eps);
            const double q = std::max(gens.at(i, k), eps);
            if (refs.at(i, k) > 0.0) kl += p * std::log(p / q);
        }
        total += kl;
    }
    return total / M;
}

int levenshtein(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    const size_t n = a.size(), m = b.size();
    std::vector<int> prev(m + 1), cur(m + 1);
    for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
    for (size_t i = 1; i <= n; ++i) {
        cur[0] = static_cast<int>(i);
        for (size_t j = 1; j <= m; ++j) {
            const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

double edit_error_rate(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
    if (ref.empty()) fail("edit_error_rate: empty reference");
    return double(levenshtein(ref, hyp)) / double(ref.size());
}

double cosine_alignment_score(const TensorT<double>& audio_feats,
                              const TensorT<double>& cond_feats) {
    if (!audio_feats.same_shape(cond_feats)) fail("cosine_alignment_score: shape mismatch");
    const int M = audio_feats.rows(), D = audio_feats.cols();
    double total = 0.0;
    for (int i = 0; i < M; ++i) {
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (int j = 0; j < D; ++j) {
            dot += audio_feats.at(i, j) * cond_feats.at(i, j);
            na += audio_feats.at(i, j) * audio_feats.at(i, j);
            nb += cond_feats.at(i, j) * cond_feats.at(i, j);
        }
        if (na <= 0.0 || nb <= 0.0) fail("cosine_alignment_score: zero vector");
        total += dot / std::sqrt(na * nb);
    }
    return 100.0 * total / M;
}

std::vector<std::string> tokenize_words(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
        } else {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<std::string> tokenize_chars(const std::string& text) {
    std::vector<std::string> out;
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) continue;
        out.emplace_back(1, static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
    return out;
}

std::vector<std::string> tokenize_phonemes(const std::string& text) {
    // coarse articulatory classes: V vowel, P labial stop, T coronal stop,
    // K velar stop, F labiodental, S sibilant, N nasal, L liquid, H glide
    auto cls = [](char c) -> const char* {
        switch (c) {
            case 'a': case 'e': case 'i': case 'o': case 'u': return "V";
            case 'b': case 'p': return "P";
            case 'd': case 't': return "T";
            case 'g': case 'k': case 'c': case 'q': return "K";
            case 'f': case 'v': case 'w': return "F";
            case 's': case 'z': case 'x': return "S";
            case 'm': case 'n': return "N";
            case 'l': case 'r': return "L";
            case 'h': case 'j': case 'y': return "H";
            default: return "?";
        }
    };
    std::vector<std::string> out;
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) continue;
        out.emplace_back(cls(static_cast<char>(std::tolower(static_cast<unsigned char>(ch)))));
    }
    return out;
}

std::vector<double> toy_features(const MelSpec& m) {
    const int T = m.rows(), F = m.cols();
    std::vector<double> feat(F, 0.0);
    for (int t = 0; t < T; ++t)
        for (int f = 0; f < F; ++f) feat[f] += m.grid.at(t, f);
    for (double& v : feat) v /= T;
    return feat;
}

std::vector<double> toy_posterior(const MelSpec& m) {
    std::vector<double> feat = toy_features(m);
    const double mx = *std::max_element(feat.begin(), feat.end());
    double sum = 0.0;
    for (double& v : feat) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : feat) v /= sum;
    return feat;
}

}  // namespace omnisonic
