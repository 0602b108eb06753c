#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "kzlab/linalg.hpp"

namespace kzlab::tensor {

/// Multisets of size k from {0..n-1} in lexicographic order; the monomial
/// basis x^I of Sym^k(C^n) / R^n.
inline std::vector<std::vector<int>> multisets(int n, int k) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    const std::function<void(int)> rec = [&](int lo) {
        if (static_cast<int>(cur.size()) == k) {
            out.push_back(cur);
            return;
        }
        for (int j = lo; j < n; ++j) {
            cur.push_back(j);
            rec(j);
            cur.pop_back();
        }
    };
    rec(0);
    return out;
}

/// k-subsets of {0..n-1} in lexicographic order; the basis e_I of the k-th
/// wedge power.
inline std::vector<std::vector<int>> subsets(int n, int k) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    const std::function<void(int)> rec = [&](int lo) {
        if (static_cast<int>(cur.size()) == k) {
            out.push_back(cur);
            return;
        }
        for (int j = lo; j < n; ++j) {
            cur.push_back(j);
            rec(j + 1);
            cur.pop_back();
        }
    };
    rec(0);
    return out;
}

namespace detail {

template <typename Mat>
Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline long long multiset_orbit(const std::vector<int>& idx) {
    // number of distinct permutations of the tuple
    long long perms = 1;
    for (std::size_t i = 2; i <= idx.size(); ++i) perms *= static_cast<long long>(i);
    int run = 1;
    long long dup = 1;
    for (std::size_t i = 1; i < idx.size(); ++i) {
        if (idx[i] == idx[i - 1]) {
            ++run;
            dup *= run;
        } else {
            run = 1;
        }
    }
    return perms / dup;
}

}  // namespace detail

template <typename Mat>
Mat tensor_power(const Mat& g, int k) {
    Mat out = Mat::Identity(1, 1);
    for (int i = 0; i < k; ++i) out = detail::kron(out, g);
    return out;
}

/// Product of k vectors in the monomial model of Sym^k: the coefficient vector
/// of the polynomial prod_i (sum_j v_i(j) x_j).
template <typename Mat, typename Vec>
Vec sym_product(const std::vector<Vec>& vs, const std::vector<std::vector<int>>& basis) {
    const int n = static_cast<int>(vs.at(0).size());
    const int k = static_cast<int>(vs.size());
    // expand iteratively over tuples via recursion on factors
    std::vector<std::pair<std::vector<int>, typename Mat::Scalar>> terms;
    terms.push_back({{}, typename Mat::Scalar(1)});
    for (int f = 0; f < k; ++f) {
        std::vector<std::pair<std::vector<int>, typename Mat::Scalar>> next;
        for (const auto& [idx, coef] : terms)
            for (int j = 0; j < n; ++j) {
                if (vs[f](j) == typename Mat::Scalar(0)) continue;
                auto nidx = idx;
                nidx.push_back(j);
                next.push_back({std::move(nidx), coef * vs[f](j)});
            }
        terms = std::move(next);
    }
    Vec out = Vec::Zero(static_cast<Eigen::Index>(basis.size()));
    for (auto& [idx, coef] : terms) {
        std::sort(idx.begin(), idx.end());
        const auto it = std::lower_bound(basis.begin(), basis.end(), idx);
        out(static_cast<Eigen::Index>(it - basis.begin())) += coef;
    }
    return out;
}

template <typename Mat>
Mat sym_power(const Mat& g, int k) {
    using Vec = Eigen::Matrix<typename Mat::Scalar, Eigen::Dynamic, 1>;
    const int n = static_cast<int>(g.rows());
    const auto basis = multisets(n, k);
    Mat out(static_cast<Eigen::Index>(basis.size()), static_cast<Eigen::Index>(basis.size()));
    for (std::size_t c = 0; c < basis.size(); ++c) {
        std::vector<Vec> cols;
        for (int i : basis[c]) cols.push_back(g.col(i));
        out.col(static_cast<Eigen::Index>(c)) = sym_product<Mat, Vec>(cols, basis);
    }
    return out;
}

/// Pairing induced on Sym^k from a bilinear pairing q on the base:
/// Q(v1 . ... . vk, w1 . ... . wk) = (1/k!) sum_sigma prod q(v_i, w_sigma(i)).
template <typename Mat>
Mat sym_pairing(const Mat& q, int k) {
    using Scalar = typename Mat::Scalar;
    const int n = static_cast<int>(q.rows());
    const auto basis = multisets(n, k);
    const auto m = static_cast<Eigen::Index>(basis.size());
    std::vector<int> perm(static_cast<std::size_t>(k));
    Mat out(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b) {
            for (int i = 0; i < k; ++i) perm[static_cast<std::size_t>(i)] = i;
            Scalar sum(0);
            long long count = 0;
            do {
                Scalar prod(1);
                for (int i = 0; i < k; ++i)
                    prod *= q(basis[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)],
                              basis[static_cast<std::size_t>(b)]
                                   [static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]);
                sum += prod;
                ++count;
            } while (std::next_permutation(perm.begin(), perm.end()));
            out(a, b) = sum / Scalar(static_cast<double>(count));
        }
    return out;
}

template <typename Mat>
Mat wedge_power(const Mat& g, int k) {
    const int n = static_cast<int>(g.rows());
    const auto basis = subsets(n, k);
    const auto m = static_cast<Eigen::Index>(basis.size());
    Mat out(m, m);
    Mat minor(k, k);
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b) {
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j)
                    minor(i, j) = g(basis[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)],
                                    basis[static_cast<std::size_t>(b)][static_cast<std::size_t>(j)]);
            out(a, b) = minor.determinant();
        }
    return out;
}

/// Induced pairing on the k-th wedge power (k-th compound of q).
template <typename Mat>
Mat wedge_pairing(const Mat& q, int k) {
    return wedge_power(q, k);
}

/// X -> g X g^{-1} on column-major vectorized matrices.
template <typename Mat>
Mat end_conjugation(const Mat& g) {
    const Mat gi = g.inverse();
    return detail::kron(Mat(gi.transpose()), g);
}

}  // namespace kzlab::tensor
