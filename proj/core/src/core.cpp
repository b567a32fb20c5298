#include "saddlelab/core.hpp"

#include <boost/random/normal_distribution.hpp>

#include <cmath>

#if defined(__SSE2__)
#include <emmintrin.h>
#endif

namespace saddlelab {

const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::InvalidDimension: return "InvalidDimension";
        case ErrorKind::InvalidInput: return "InvalidInput";
        case ErrorKind::NotSymmetric: return "NotSymmetric";
        case ErrorKind::NotPSD: return "NotPSD";
        case ErrorKind::UnsupportedNoise: return "UnsupportedNoise";
        case ErrorKind::InvalidTag: return "InvalidTag";
        case ErrorKind::DivergenceDetected: return "DivergenceDetected";
        case ErrorKind::DivergentRegime: return "DivergentRegime";
        case ErrorKind::SgdaBilinearDivergence: return "SgdaBilinearDivergence";
        case ErrorKind::Degenerate: return "Degenerate";
        case ErrorKind::QuadratureError: return "QuadratureError";
        case ErrorKind::GridMismatch: return "GridMismatch";
        case ErrorKind::StatisticMismatch: return "StatisticMismatch";
        case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

}  // namespace saddlelab

namespace saddlelab::core {

StateVector::StateVector(Vec z) : z_(std::move(z)) {
    if (z_.size() < 2 || z_.size() % 2 != 0)
        throw Error(ErrorKind::InvalidDimension, "state length must be 2d with d >= 1");
}

StateVector::StateVector(const Vec& x, const Vec& y) {
    if (x.size() != y.size() || x.size() < 1)
        throw Error(ErrorKind::InvalidDimension, "x and y must share length d >= 1");
    z_.resize(2 * x.size());
    z_ << x, y;
}

DiagMatrix::DiagMatrix(Vec entries, bool psd) : entries_(std::move(entries)) {
    if (entries_.size() < 1) throw Error(ErrorKind::InvalidDimension, "empty diagonal");
    if (!entries_.allFinite()) throw Error(ErrorKind::InvalidInput, "non-finite diagonal entry");
    if (psd && (entries_.array() < 0.0).any())
        throw Error(ErrorKind::InvalidInput, "diagonal must be nonnegative");
}

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

#if defined(__SSE2__)
// Four blocks per register, one word per lane. pmuludq multiplies lanes 0 and 2, so the
// even and odd lanes take separate products that are recombined into lo and hi words.
void philox_blocks(std::uint64_t ctr, std::uint64_t run, std::uint64_t seed, std::uint32_t* out) {
    constexpr int L = RngStream::kLanes;
    static_assert(L % 4 == 0);
    const __m128i m0 = _mm_set1_epi32(static_cast<int>(kM0)), m1 = _mm_set1_epi32(static_cast<int>(kM1));
    const __m128i even = _mm_set_epi32(0, -1, 0, -1);
    for (int g = 0; g < L / 4; ++g) {
        alignas(16) std::uint32_t w0[4], w1[4];
        for (int j = 0; j < 4; ++j) {
            std::uint64_t cj = ctr + static_cast<std::uint64_t>(4 * g + j);
            w0[j] = static_cast<std::uint32_t>(cj);
            w1[j] = static_cast<std::uint32_t>(cj >> 32);
        }
        __m128i c0 = _mm_load_si128(reinterpret_cast<const __m128i*>(w0));
        __m128i c1 = _mm_load_si128(reinterpret_cast<const __m128i*>(w1));
        __m128i c2 = _mm_set1_epi32(static_cast<int>(static_cast<std::uint32_t>(run)));
        __m128i c3 = _mm_set1_epi32(static_cast<int>(static_cast<std::uint32_t>(run >> 32)));
        std::uint32_t k0 = static_cast<std::uint32_t>(seed), k1 = static_cast<std::uint32_t>(seed >> 32);
        for (int r = 0; r < 10; ++r) {
            __m128i pe0 = _mm_mul_epu32(c0, m0), po0 = _mm_mul_epu32(_mm_srli_epi64(c0, 32), m0);
            __m128i pe1 = _mm_mul_epu32(c2, m1), po1 = _mm_mul_epu32(_mm_srli_epi64(c2, 32), m1);
            __m128i lo0 = _mm_or_si128(_mm_and_si128(pe0, even), _mm_slli_epi64(po0, 32));
            __m128i hi0 = _mm_or_si128(_mm_srli_epi64(pe0, 32), _mm_andnot_si128(even, po0));
            __m128i lo1 = _mm_or_si128(_mm_and_si128(pe1, even), _mm_slli_epi64(po1, 32));
            __m128i hi1 = _mm_or_si128(_mm_srli_epi64(pe1, 32), _mm_andnot_si128(even, po1));
            c0 = _mm_xor_si128(_mm_xor_si128(hi1, c1), _mm_set1_epi32(static_cast<int>(k0)));
            c2 = _mm_xor_si128(_mm_xor_si128(hi0, c3), _mm_set1_epi32(static_cast<int>(k1)));
            c1 = lo1;
            c3 = lo0;
            k0 += kW0;
            k1 += kW1;
        }
        alignas(16) std::uint32_t o[4][4];
        _mm_store_si128(reinterpret_cast<__m128i*>(o[0]), c0);
        _mm_store_si128(reinterpret_cast<__m128i*>(o[1]), c1);
        _mm_store_si128(reinterpret_cast<__m128i*>(o[2]), c2);
        _mm_store_si128(reinterpret_cast<__m128i*>(o[3]), c3);
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 4; ++i) out[4 * (4 * g + j) + i] = o[i][j];
    }
}
#else
void philox_blocks(std::uint64_t ctr, std::uint64_t run, std::uint64_t seed, std::uint32_t* out) {
    for (int j = 0; j < RngStream::kLanes; ++j) {
        std::uint64_t cj = ctr + static_cast<std::uint64_t>(j);
        auto b = detail::philox4x32_10({static_cast<std::uint32_t>(cj), static_cast<std::uint32_t>(cj >> 32),
                                        static_cast<std::uint32_t>(run), static_cast<std::uint32_t>(run >> 32)},
                                       {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
        for (int i = 0; i < 4; ++i) out[4 * j + i] = b[i];
    }
}
#endif

}  // namespace

std::array<std::uint32_t, 4> detail::philox4x32_10(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> k) {
    for (int r = 0; r < 10; ++r) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kM0, c[0], hi0, lo0);
        mulhilo(kM1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kW0;
        k[1] += kW1;
    }
    return c;
}

RngStream::RngStream(std::uint64_t base_seed, std::uint64_t run_index)
    : seed_(base_seed), run_(run_index) {}

void RngStream::refill() {
    philox_blocks(ctr_, run_, seed_, buf_.data());
    ctr_ += kLanes;
    pos_ = 0;
}

// Each output packs two consecutive Philox words, high word first.
RngStream::result_type RngStream::operator()() {
    if (pos_ == kBuffer) refill();
    std::uint64_t hi = buf_[pos_], lo = buf_[pos_ + 1];
    pos_ += 2;
    return (hi << 32) | lo;
}

double RngStream::uniform() {
    std::uint64_t bits = (*this)() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
    boost::random::normal_distribution<double> nd;
    return nd(*this);
}

void fill_gaussian(RngStream& rng, double scale, Eigen::Ref<Vec> out) {
    boost::random::normal_distribution<double> nd(0.0, 1.0);
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = scale * nd(rng);
}

Vec gaussian_vector(RngStream& rng, int dim, double scale) {
    if (dim < 1) throw Error(ErrorKind::InvalidDimension, "gaussian_vector dim must be >= 1");
    if (!(scale >= 0.0)) throw Error(ErrorKind::InvalidInput, "gaussian_vector scale must be >= 0");
    Vec v(dim);
    fill_gaussian(rng, scale, v);
    return v;
}

SquareMatrix psd_sqrt(const SquareMatrix& m, double tol) {
    if (m.rows() != m.cols() || m.rows() == 0)
        throw Error(ErrorKind::InvalidDimension, "psd_sqrt needs a non-empty square matrix");
    if (!m.allFinite()) throw Error(ErrorKind::InvalidInput, "psd_sqrt input is not finite");
    double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * scale)
        throw Error(ErrorKind::NotSymmetric, "psd_sqrt input is not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()));
    Vec ev = es.eigenvalues();
    double lo = ev.minCoeff();
    if (lo < -tol * scale)
        throw Error(ErrorKind::NotPSD, "psd_sqrt input has eigenvalue " + std::to_string(lo));
    Vec r = ev.cwiseMax(0.0).cwiseSqrt();
    Mat s = es.eigenvectors() * r.asDiagonal() * es.eigenvectors().transpose();
    return 0.5 * (s + s.transpose());
}

}  // namespace saddlelab::core
