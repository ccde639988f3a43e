#include "qdesim/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "json.hpp"

namespace qdesim {

double Sidecar::low(const std::string& name) const {
    auto it = ranges.find(name);
    if (it == ranges.end()) throw ModelError("sidecar lacks parameter " + name);
    return it->second.first;
}

double Sidecar::high(const std::string& name) const {
    auto it = ranges.find(name);
    if (it == ranges.end()) throw ModelError("sidecar lacks parameter " + name);
    return it->second.second;
}

Sidecar loadSidecar(const std::string& text) {
    nlohmann::json doc = nlohmann::json::parse(text);
    Sidecar s;
    s.model = doc.at("model").get<std::string>();
    if (doc.contains("families"))
        for (auto& [key, value] : doc.at("families").items())
            s.families[key] = value.get<std::string>();
    for (auto& [key, value] : doc.at("parameters").items()) {
        if (!value.is_array() || value.size() != 2)
            throw ModelError("sidecar parameter " + key + " needs [low, high]");
        double lo = value[0].get<double>();
        double hi = value[1].get<double>();
        if (!(lo <= hi)) throw ModelError("sidecar range inverted for " + key);
        s.ranges[key] = {lo, hi};
    }
    return s;
}

namespace {

using StateVec = std::vector<double>;
using DerivFn = std::function<StateVec(const StateVec&)>;

/// Fixed-step RK4 trajectory with cubic Hermite dense output.
struct Dense {
    std::vector<double> t;
    std::vector<StateVec> y;
    std::vector<StateVec> dy;

    StateVec at(double time) const {
        auto it = std::upper_bound(t.begin(), t.end(), time);
        std::size_t i = it == t.begin() ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
        if (i + 1 >= t.size()) i = t.size() - 2;
        double h = t[i + 1] - t[i];
        double u = (time - t[i]) / h;
        double u2 = u * u, u3 = u2 * u;
        double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u;
        double h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
        StateVec out(y[i].size());
        for (std::size_t d = 0; d < out.size(); ++d)
            out[d] = h00 * y[i][d] + h10 * h * dy[i][d] + h01 * y[i + 1][d] +
                     h11 * h * dy[i + 1][d];
        return out;
    }
};

StateVec rk4Step(const DerivFn& f, const StateVec& y, double h) {
    StateVec k1 = f(y);
    StateVec tmp(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    StateVec k2 = f(tmp);
    for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    StateVec k3 = f(tmp);
    for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + h * k3[i];
    StateVec k4 = f(tmp);
    StateVec out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        out[i] = y[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    return out;
}

/// Refine a sign change of fn between grid times [lo, hi] by bisection
/// on the dense interpolant.
double refineEvent(const Dense& d, const std::function<double(const StateVec&)>& fn,
                   double lo, double hi) {
    double flo = fn(d.at(lo));
    for (int i = 0; i < 80; ++i) {
        double mid = 0.5 * (lo + hi);
        double fmid = fn(d.at(mid));
        if ((flo < 0) == (fmid < 0)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Sample times: three interior points per inter-event gap plus the
/// event instant with time-symmetric flanks. Symmetric flanks make
/// centered differences vanish at extrema.
std::vector<double> buildSampleTimes(double t0, double tEnd,
                                     std::vector<double> events,
                                     const std::function<double(double)>& flankGuard) {
    std::sort(events.begin(), events.end());
    const double tiny = 1e-9 * (tEnd - t0);
    std::vector<double> distinct;
    for (double e : events) {
        if (e <= t0 + tiny || e >= tEnd - tiny) continue;
        if (!distinct.empty() && e - distinct.back() < 100 * tiny) continue;
        distinct.push_back(e);
    }

    std::vector<double> bounds{t0};
    bounds.insert(bounds.end(), distinct.begin(), distinct.end());
    bounds.push_back(tEnd);

    std::vector<double> samples{t0};
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        double gap = bounds[i + 1] - bounds[i];
        for (double frac : {0.3, 0.5, 0.7}) samples.push_back(bounds[i] + frac * gap);
    }
    for (std::size_t i = 0; i < distinct.size(); ++i) {
        double left = distinct[i] - bounds[i];
        double right = bounds[i + 2] - distinct[i];
        double delta = 0.2 * std::min(left, right);
        double cap = 0.28 * std::min(left, right);
        // Push flanks out of any tolerance-sensitive band around the
        // event (quadratically flat companion variables).
        while (flankGuard && delta < cap &&
               (flankGuard(distinct[i] - delta) > 0 ||
                flankGuard(distinct[i] + delta) > 0))
            delta *= 1.4;
        samples.push_back(distinct[i] - delta);
        samples.push_back(distinct[i]);
        samples.push_back(distinct[i] + delta);
    }
    std::sort(samples.begin(), samples.end());
    samples.erase(std::unique(samples.begin(), samples.end(),
                              [&](double a, double b) { return b - a < tiny; }),
                  samples.end());
    return samples;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

OracleTrace sampleNaive(const QdeModel& m, const Sidecar& s, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const double r = uniform(rng, s.low("r"), s.high("r"));
    const double Q = uniform(rng, s.low("Q"), s.high("Q"));
    const double b = uniform(rng, s.low("b"), s.high("b"));
    const double x0Frac = uniform(rng, s.low("x0Frac"), s.high("x0Frac"));
    double xhFrac = uniform(rng, s.low("xhFrac"), s.high("xhFrac"));

    const double xmsy = 0.5 * Q;
    const double msy = 0.25 * r * Q;
    const double x0 = xmsy + x0Frac * (Q - xmsy);
    // Keep the harvest landmark crossing clear of the stock landmark.
    for (int i = 0; i < 64 && std::abs(xhFrac * x0 - xmsy) < 0.02 * Q; ++i)
        xhFrac = uniform(rng, s.low("xhFrac"), s.high("xhFrac"));
    const double xh = xhFrac * x0;

    auto recruit = [&](double x) { return r * x * (1.0 - x / Q); };
    auto harvest = [&](double x) { return msy * std::pow(x / xh, b); };
    auto harvestD = [&](double x) {
        return msy * b * std::pow(x / xh, b - 1.0) / xh;
    };
    auto recruitD = [&](double x) { return r * (1.0 - 2.0 * x / Q); };
    auto f = [&](double x) { return recruit(x) - harvest(x); };

    // Truncation stock level: stop while the flow is still a solid
    // fraction of its peak, keeping the abstraction away from
    // equilibria and the extinction bound.
    const int grid = 4000;
    const double xFloor = 1e-3 * Q;
    double maxAbsF = 0.0;
    for (int i = 0; i <= grid; ++i) {
        double x = xFloor + (x0 - xFloor) * i / grid;
        maxAbsF = std::max(maxAbsF, std::abs(f(x)));
    }
    const double threshold =
        std::min(0.02 * maxAbsF, 0.5 * std::abs(f(x0)));
    double xStop = xFloor;
    for (int i = 0; i <= grid; ++i) {
        double x = x0 - (x0 - xFloor) * i / grid;
        if (std::abs(f(x)) < threshold) break;
        xStop = x;
    }

    // Event stock levels: the landmark crossings and the flow extrema.
    std::vector<double> eventX;
    if (xmsy > xStop && xmsy < x0) eventX.push_back(xmsy);
    if (xh > xStop && xh < x0) eventX.push_back(xh);
    double prev = recruitD(x0) - harvestD(x0);
    for (int i = 1; i <= grid; ++i) {
        double x = x0 - (x0 - xStop) * i / grid;
        double cur = recruitD(x) - harvestD(x);
        if ((prev < 0) != (cur < 0)) {
            double lo = x, hi = x + (x0 - xStop) / grid;
            for (int j = 0; j < 80; ++j) {
                double mid = 0.5 * (lo + hi);
                if ((recruitD(mid) - harvestD(mid) < 0) == (cur < 0))
                    lo = mid;
                else
                    hi = mid;
            }
            eventX.push_back(0.5 * (lo + hi));
        }
        prev = cur;
    }

    // Time horizon estimate, then fixed-step integration down to xStop.
    double horizon = 0.0;
    for (int i = 0; i < grid; ++i) {
        double xa = xStop + (x0 - xStop) * i / grid;
        double xb = xStop + (x0 - xStop) * (i + 1) / grid;
        horizon += (xb - xa) / std::max(std::abs(f(0.5 * (xa + xb))), threshold);
    }
    const double dt = horizon / 4000.0;

    DerivFn deriv = [&](const StateVec& y) { return StateVec{f(y[0])}; };
    Dense dense;
    dense.t.push_back(0.0);
    dense.y.push_back({x0});
    dense.dy.push_back(deriv(dense.y.back()));
    while (dense.y.back()[0] > xStop && dense.t.size() < 200000) {
        StateVec next = rk4Step(deriv, dense.y.back(), dt);
        dense.t.push_back(dense.t.back() + dt);
        dense.y.push_back(next);
        dense.dy.push_back(deriv(next));
    }
    const double tEnd = dense.t.back();

    // Event times from the monotone stock coordinate.
    std::vector<double> eventT;
    for (double xe : eventX)
        for (std::size_t i = 0; i + 1 < dense.t.size(); ++i)
            if (dense.y[i][0] >= xe && dense.y[i + 1][0] < xe) {
                eventT.push_back(refineEvent(
                    dense, [&](const StateVec& y) { return y[0] - xe; },
                    dense.t[i], dense.t[i + 1]));
                break;
            }

    // Near x_MSY the recruitment flattens quadratically; flanks must
    // sit where the stock is visibly away from the landmark.
    auto guard = [&](double time) -> double {
        double x = dense.at(time)[0];
        double d = std::abs(x - xmsy);
        return d < 2e-3 * Q ? 2e-3 * Q - d : 0.0;
    };
    std::vector<double> times = buildSampleTimes(0.0, tEnd, eventT, guard);

    OracleTrace out;
    out.trace.times = times;
    out.trace.samples.assign(static_cast<std::size_t>(m.varCount()), {});
    const int vx = m.requireVar("x");
    const int vh = m.requireVar("h");
    const int vR = m.requireVar("R");
    const int vdx = m.requireVar("dx");
    double minF = 0.0;
    for (double time : times) {
        double x = dense.at(time)[0];
        double flow = f(x);
        minF = std::min(minF, flow);
        out.trace.samples[static_cast<std::size_t>(vx)].push_back(x);
        out.trace.samples[static_cast<std::size_t>(vh)].push_back(harvest(x));
        out.trace.samples[static_cast<std::size_t>(vR)].push_back(recruit(x));
        out.trace.samples[static_cast<std::size_t>(vdx)].push_back(flow);
    }

    out.landmarkValues.assign(static_cast<std::size_t>(m.varCount()), {});
    out.landmarkValues[static_cast<std::size_t>(vx)] = {0.0, xmsy, Q, 1.5 * Q};
    out.landmarkValues[static_cast<std::size_t>(vh)] = {0.0, msy,
                                                        1.5 * harvest(x0)};
    out.landmarkValues[static_cast<std::size_t>(vR)] = {0.0, msy, 1.5 * msy};
    out.landmarkValues[static_cast<std::size_t>(vdx)] = {1.5 * minF, 0.0,
                                                         -1.5 * minF};
    return out;
}

OracleTrace sampleFishery(const QdeModel& m, const Sidecar& s,
                          std::uint64_t seed) {
    std::mt19937_64 rng(seed);

    double r = 1, Q = 1, alpha = 0.5, beta = 0.5, p = 1, q = 1, sexp = 1;
    double x0 = 0, k0 = 0, i0 = 0, eta = 0, c = 0;
    double xmsy = 0, msy = 0;
    bool accepted = false;
    for (int attempt = 0; attempt < 500 && !accepted; ++attempt) {
        r = uniform(rng, s.low("r"), s.high("r"));
        Q = uniform(rng, s.low("Q"), s.high("Q"));
        alpha = uniform(rng, s.low("alpha"), s.high("alpha"));
        beta = uniform(rng, s.low("beta"), s.high("beta"));
        p = uniform(rng, s.low("p"), s.high("p"));
        q = uniform(rng, s.low("q"), s.high("q"));
        sexp = uniform(rng, s.low("s"), s.high("s"));
        double x0Frac = uniform(rng, s.low("x0Frac"), s.high("x0Frac"));
        double hFrac = uniform(rng, s.low("hFrac"), s.high("hFrac"));
        double iFrac = uniform(rng, s.low("iFrac"), s.high("iFrac"));
        double mFrac = uniform(rng, s.low("mFrac"), s.high("mFrac"));
        k0 = uniform(rng, s.low("k0"), s.high("k0"));

        xmsy = 0.5 * Q;
        msy = 0.25 * r * Q;
        x0 = xmsy + x0Frac * (Q - xmsy);
        double h0 = hFrac * msy;
        eta = h0 / (std::pow(x0, alpha) * std::pow(k0, beta));
        i0 = k0 * (1.0 + iFrac);
        double mvk0 = mFrac * i0;
        c = mvk0 /
            (std::pow(h0, p) * std::pow(x0, -q) * std::pow(k0, -sexp));

        // The scenario opens with harvest below MSY and rising,
        // capital building up.
        double dx0 = r * x0 * (1.0 - x0 / Q) - h0;
        double hdot0 = h0 * (alpha * dx0 / x0 + beta * (i0 - k0) / k0);
        accepted = hdot0 > 0.02 * msy && h0 < 0.9 * msy;
    }
    if (!accepted) throw ModelError("could not sample a fishery instance");

    auto recruit = [&](double x) { return r * x * (1.0 - x / Q); };
    auto recruitD = [&](double x) { return r * (1.0 - 2.0 * x / Q); };
    auto harvest = [&](double x, double k) {
        return eta * std::pow(x, alpha) * std::pow(k, beta);
    };
    auto mvkOf = [&](double h, double x, double k) {
        return c * std::pow(h, p) * std::pow(x, -q) * std::pow(k, -sexp);
    };
    DerivFn deriv = [&](const StateVec& y) {
        double x = y[0], k = y[1], I = y[2];
        double h = harvest(x, k);
        return StateVec{recruit(x) - h, I - k, I - mvkOf(h, x, k)};
    };

    const double horizon = 40.0 / std::min(1.0, r);
    const double dt = horizon / 12000.0;
    Dense dense;
    dense.t.push_back(0.0);
    dense.y.push_back({x0, k0, i0});
    dense.dy.push_back(deriv(dense.y.back()));

    double maxRate[3] = {0, 0, 0};
    double runMax[3] = {x0, k0, i0};
    while (dense.t.back() < horizon && dense.t.size() < 200000) {
        StateVec next = rk4Step(deriv, dense.y.back(), dt);
        StateVec nd = deriv(next);
        bool stop = false;
        for (int d = 0; d < 3; ++d) {
            runMax[d] = std::max(runMax[d], next[static_cast<std::size_t>(d)]);
            maxRate[d] =
                std::max(maxRate[d], std::abs(nd[static_cast<std::size_t>(d)]));
            if (next[static_cast<std::size_t>(d)] <
                0.005 * runMax[static_cast<std::size_t>(d)])
                stop = true;
        }
        bool settled = true;
        for (int d = 0; d < 3; ++d)
            settled = settled && std::abs(nd[static_cast<std::size_t>(d)]) <
                                     0.02 * maxRate[static_cast<std::size_t>(d)];
        if (stop || settled) break;
        dense.t.push_back(dense.t.back() + dt);
        dense.y.push_back(std::move(next));
        dense.dy.push_back(std::move(nd));
    }
    const double tEnd = dense.t.back();

    // Quantities whose sign changes mark qualitative events.
    auto hdotOf = [&](const StateVec& y) {
        double x = y[0], k = y[1], I = y[2];
        double h = harvest(x, k);
        double dx = recruit(x) - h;
        return h * (alpha * dx / x + beta * (I - k) / k);
    };
    auto mvkdotOf = [&](const StateVec& y) {
        double x = y[0], k = y[1], I = y[2];
        double h = harvest(x, k);
        double dx = recruit(x) - h;
        double dk = I - k;
        double mvk = mvkOf(h, x, k);
        return mvk * (p * hdotOf(y) / h - q * dx / x - sexp * dk / k);
    };
    std::vector<std::function<double(const StateVec&)>> monitors = {
        [&](const StateVec& y) { return y[0] - xmsy; },
        [&](const StateVec& y) { return harvest(y[0], y[1]) - msy; },
        [&](const StateVec& y) { return recruit(y[0]) - harvest(y[0], y[1]); },
        [&](const StateVec& y) { return y[2] - y[1]; },
        [&](const StateVec& y) {
            return y[2] - mvkOf(harvest(y[0], y[1]), y[0], y[1]);
        },
        [&](const StateVec& y) {
            double dx = recruit(y[0]) - harvest(y[0], y[1]);
            return recruitD(y[0]) * dx - hdotOf(y);
        },
        hdotOf,
        [&](const StateVec& y) {
            double dI = y[2] - mvkOf(harvest(y[0], y[1]), y[0], y[1]);
            return dI - (y[2] - y[1]);
        },
        [&](const StateVec& y) {
            double dI = y[2] - mvkOf(harvest(y[0], y[1]), y[0], y[1]);
            return dI - mvkdotOf(y);
        },
        mvkdotOf,
    };

    std::vector<double> eventT;
    for (const auto& fn : monitors) {
        double prev = fn(dense.y.front());
        for (std::size_t i = 1; i < dense.t.size(); ++i) {
            double cur = fn(dense.y[i]);
            if ((prev < 0) != (cur < 0))
                eventT.push_back(
                    refineEvent(dense, fn, dense.t[i - 1], dense.t[i]));
            prev = cur;
        }
    }

    auto guard = [&](double time) -> double {
        double x = dense.at(time)[0];
        double d = std::abs(x - xmsy);
        return d < 2e-3 * Q ? 2e-3 * Q - d : 0.0;
    };
    std::vector<double> times = buildSampleTimes(0.0, tEnd, eventT, guard);

    OracleTrace out;
    out.trace.times = times;
    out.trace.samples.assign(static_cast<std::size_t>(m.varCount()), {});
    const int vx = m.requireVar("x");
    const int vh = m.requireVar("h");
    const int vR = m.requireVar("R");
    const int vdx = m.requireVar("dx");
    const int vk = m.requireVar("k");
    const int vdk = m.requireVar("dk");
    const int vI = m.requireVar("I");
    const int vdI = m.requireVar("dI");
    const int vmvk = m.requireVar("mvk");

    double maxObs[16] = {};
    double minObs[16] = {};
    auto record = [&](int var, double value) {
        out.trace.samples[static_cast<std::size_t>(var)].push_back(value);
        maxObs[var] = std::max(maxObs[var], value);
        minObs[var] = std::min(minObs[var], value);
    };
    for (double time : times) {
        StateVec y = dense.at(time);
        double x = y[0], k = y[1], I = y[2];
        double h = harvest(x, k);
        double mvk = mvkOf(h, x, k);
        record(vx, x);
        record(vh, h);
        record(vR, recruit(x));
        record(vdx, recruit(x) - h);
        record(vk, k);
        record(vdk, I - k);
        record(vI, I);
        record(vdI, I - mvk);
        record(vmvk, mvk);
    }

    auto signedSpace = [&](int var) -> std::vector<double> {
        double lo = std::min(1.5 * minObs[var], -0.3 * std::max(maxObs[var], 1e-9));
        double hi = std::max(1.5 * maxObs[var], -0.3 * std::min(minObs[var], -1e-9));
        return {lo, 0.0, hi};
    };
    out.landmarkValues.assign(static_cast<std::size_t>(m.varCount()), {});
    out.landmarkValues[static_cast<std::size_t>(vx)] = {0.0, xmsy, Q,
                                                        1.5 * std::max(maxObs[vx], Q)};
    out.landmarkValues[static_cast<std::size_t>(vh)] = {
        0.0, msy, std::max(1.5 * maxObs[vh], 2.0 * msy)};
    out.landmarkValues[static_cast<std::size_t>(vR)] = {0.0, msy, 1.5 * msy};
    out.landmarkValues[static_cast<std::size_t>(vdx)] = signedSpace(vdx);
    out.landmarkValues[static_cast<std::size_t>(vk)] = {0.0, 1.5 * maxObs[vk]};
    out.landmarkValues[static_cast<std::size_t>(vdk)] = signedSpace(vdk);
    out.landmarkValues[static_cast<std::size_t>(vI)] = {0.0, 1.5 * maxObs[vI]};
    out.landmarkValues[static_cast<std::size_t>(vdI)] = signedSpace(vdI);
    out.landmarkValues[static_cast<std::size_t>(vmvk)] = {0.0, 1.5 * maxObs[vmvk]};
    return out;
}

}  // namespace

OracleTrace sampleTrace(const QdeModel& m, const Sidecar& s, std::uint64_t seed) {
    if (s.model != m.name)
        throw ModelError("sidecar is for model " + s.model + ", not " + m.name);
    if (s.families.count("capital"))
        return sampleFishery(m, s, seed);
    return sampleNaive(m, s, seed);
}

}  // namespace qdesim
