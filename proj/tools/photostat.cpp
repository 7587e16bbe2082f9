// photostat: simulate and analyze two-channel photodetection timetag runs.
//
// Subcommands:
//   simulate <config>      generate a timetag stream from a flat key=value
//                          config (env overrides: PHOTOSTAT_<KEY>)
//   analyze <timetags>     per-pulse statistics, Mandel Q vs window size,
//                          optional sliding variance trace
//   fit sat <csv>          saturation-curve fit (energy_pj,rate_cps,int_time_s)
//   fit qcurve <csv>       dark-state fit of a measured Q(T) curve
//   g2 <timetags>          start-stop delay histogram between the two arms
//
// Exit codes: 0 success, 2 user-input problem (config, file contents, CLI
// usage), 1 internal failure.
#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "photostat/config.hpp"
#include "photostat/fit.hpp"
#include "photostat/kernels.hpp"
#include "photostat/model.hpp"
#include "photostat/report.hpp"
#include "photostat/simulate.hpp"
#include "photostat/stats.hpp"
#include "photostat/timetag_io.hpp"

using namespace photostat;

namespace {

struct UserError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty())
        std::fputs(text.c_str(), stdout);
    else
        write_text_file(out_path, text);
}

// ---------------------------------------------------------------- simulate

RunConfig sps_config_from(const Config& cfg) {
    RunConfig rc;
    rc.n_pulses = cfg.get_uint("n_pulses");
    rc.seed = cfg.get_uint("seed");
    rc.rep_period_ps = cfg.get_int_or("rep_period_ps", rc.rep_period_ps);
    rc.excitation.pulse_energy_pj =
        cfg.get_double_or("pulse_energy_pj", rc.excitation.pulse_energy_pj);
    rc.excitation.sat_energy_pj =
        cfg.get_double_or("sat_energy_pj", rc.excitation.sat_energy_pj);
    rc.excitation.pulse_duration_s =
        cfg.get_double_or("pulse_duration_s", rc.excitation.pulse_duration_s);
    rc.excitation.rad_lifetime_s =
        cfg.get_double_or("rad_lifetime_s", rc.excitation.rad_lifetime_s);
    rc.isc_prob = cfg.get_double_or("isc_prob", rc.isc_prob);
    rc.triplet_lifetime_s =
        cfg.get_double_or("triplet_lifetime_s", rc.triplet_lifetime_s);
    rc.background_mean =
        cfg.get_double_or("background_mean", rc.background_mean);
    rc.reject_window_mult =
        cfg.get_double_or("reject_window_mult", rc.reject_window_mult);
    rc.detection.efficiency =
        cfg.get_double_or("efficiency", rc.detection.efficiency);
    rc.detection.split_ratio =
        cfg.get_double_or("split_ratio", rc.detection.split_ratio);
    rc.detection.dead_time_ps =
        cfg.get_int_or("dead_time_ps", rc.detection.dead_time_ps);
    rc.detection.dark_rate_cps =
        cfg.get_double_or("dark_rate_cps", rc.detection.dark_rate_cps);
    return rc;
}

CoherentRunConfig coherent_config_from(const Config& cfg) {
    CoherentRunConfig cc;
    cc.n_pulses = cfg.get_uint("n_pulses");
    cc.seed = cfg.get_uint("seed");
    cc.mean_photons = cfg.get_double("coherent_mean");
    cc.rep_period_ps = cfg.get_int_or("rep_period_ps", cc.rep_period_ps);
    cc.detection.split_ratio =
        cfg.get_double_or("split_ratio", cc.detection.split_ratio);
    cc.detection.dead_time_ps =
        cfg.get_int_or("dead_time_ps", cc.detection.dead_time_ps);
    cc.detection.dark_rate_cps =
        cfg.get_double_or("dark_rate_cps", cc.detection.dark_rate_cps);
    return cc;
}

int cmd_simulate(const std::string& cfg_path, const std::string& out_path,
                 bool as_csv, const std::string& truth_path,
                 const std::string& manifest_path) {
    Config cfg = Config::from_file(cfg_path);
    cfg.apply_env_overrides();
    const std::string source = cfg.get_string("source");

    TimetagStream stream;
    GroundTruth truth;
    bool have_truth = false;
    if (source == "sps") {
        RunConfig rc = sps_config_from(cfg);
        stream = simulate_run(rc, truth_path.empty() ? nullptr : &truth);
        have_truth = !truth_path.empty();
    } else if (source == "coherent") {
        stream = simulate_coherent_run(coherent_config_from(cfg));
    } else {
        throw UserError("config field 'source' must be 'sps' or 'coherent', got '" +
                        source + "'");
    }

    if (as_csv)
        write_timetags_csv(out_path, stream);
    else
        write_timetags_binary(out_path, stream);

    if (have_truth) {
        std::string t = "pulse,on,emitted\n";
        for (std::size_t i = 0; i < truth.on.size(); ++i) {
            t += std::to_string(i);
            t += truth.on[i] ? ",1," : ",0,";
            t += truth.emitted[i] ? "1\n" : "0\n";
        }
        write_text_file(truth_path, t);
    }

    if (!manifest_path.empty()) {
        KvPairs kv;
        kv.push_back({"command", "simulate"});
        kv.push_back({"config_file", cfg_path});
        for (const auto& [k, v] : cfg.values()) kv.push_back({"cfg." + k, v});
        kv.push_back({"records", std::to_string(stream.records.size())});
        kv.push_back({"output", out_path});
        kv.push_back({"output_fnv1a64", hex64(fnv1a64_file(out_path))});
        if (have_truth) {
            kv.push_back({"truth", truth_path});
            kv.push_back({"truth_fnv1a64", hex64(fnv1a64_file(truth_path))});
        }
        write_text_file(manifest_path, render_kv(kv));
    }
    return 0;
}

// ----------------------------------------------------------------- analyze

std::int64_t metadata_cutoff_ps(const TimetagStream& s,
                                const std::string& origin) {
    Config meta = Config::from_text(s.metadata, origin + ":metadata");
    double mult = meta.get_double_or("reject_window_mult", 0.0);
    double rad = meta.get_double_or("rad_lifetime_s", 0.0);
    if (mult > 0.0 && rad > 0.0)
        return static_cast<std::int64_t>(std::llround(mult * rad * 1e12));
    return 0; // keep every in-period tag
}

int cmd_analyze(const std::string& in_path, const std::string& report_path,
                const std::string& qcurve_path, const std::string& trace_path,
                std::int64_t cutoff_ps, std::uint64_t kmax, unsigned n_boot,
                std::uint64_t trace_window, std::uint64_t trace_stride) {
    TimetagStream s = read_timetags(in_path);
    if (s.n_pulses == 0) {
        if (s.records.empty())
            throw UserError(in_path + ": no pulses and no records to analyze");
        s.n_pulses = s.records.back().time_ps /
                         static_cast<std::uint64_t>(s.rep_period_ps) +
                     1;
    }
    if (cutoff_ps < 0) cutoff_ps = metadata_cutoff_ps(s, in_path);

    PulseCountSeries series =
        bin_to_pulses(s.records, s.n_pulses, s.rep_period_ps, cutoff_ps);
    PhotocountStats st = estimate_pn(series);
    QCurve curve =
        mandel_q_curve(series, default_k_grid(s.n_pulses, kmax), n_boot);

    KvPairs kv;
    kv.push_back({"input", in_path});
    kv.push_back({"n_pulses", std::to_string(s.n_pulses)});
    kv.push_back({"rep_period_ps", std::to_string(s.rep_period_ps)});
    kv.push_back({"records", std::to_string(s.records.size())});
    kv.push_back({"accepted", std::to_string(series.accepted)});
    kv.push_back({"rejected", std::to_string(series.rejected)});
    kv.push_back({"cutoff_ps", std::to_string(cutoff_ps)});
    kv.push_back({"p0", fmt12(st.p0)});
    kv.push_back({"p1", fmt12(st.p1)});
    kv.push_back({"p2", fmt12(st.p2)});
    kv.push_back({"p_more", fmt12(st.p_more)});
    kv.push_back({"mean", fmt12(st.mean)});
    kv.push_back({"variance", fmt12(st.variance)});
    kv.push_back({"variance_norm", fmt12(st.variance_norm)});
    kv.push_back({"mandel_q", fmt12(st.mandel_q)});
    if (!curve.empty()) {
        kv.push_back({"q_rep", fmt12(curve.front().mandel_q)});
        kv.push_back({"q_rep_stderr", fmt12(curve.front().stderr_q)});
    }
    emit(render_kv(kv), report_path);

    if (!qcurve_path.empty()) {
        std::string out = "k,window_s,mandel_q,stderr,n_windows\n";
        for (const QCurvePoint& pt : curve) {
            out += std::to_string(pt.k);
            out += ',';
            out += fmt12(pt.window_s);
            out += ',';
            out += fmt12(pt.mandel_q);
            out += ',';
            out += fmt12(pt.stderr_q);
            out += ',';
            out += std::to_string(pt.n_windows);
            out += '\n';
        }
        write_text_file(qcurve_path, out);
    }

    if (!trace_path.empty()) {
        VarianceTrace tr = sliding_variance(series, trace_window);
        if (trace_stride == 0) {
            trace_stride = tr.mean.size() / 5000;
            if (trace_stride == 0) trace_stride = 1;
        }
        std::string out = "start_pulse,mean,variance_norm\n";
        for (std::size_t i = 0; i < tr.mean.size(); i += trace_stride) {
            out += std::to_string(i);
            out += ',';
            out += fmt12(tr.mean[i]);
            out += ',';
            out += fmt12(tr.vnorm[i]);
            out += '\n';
        }
        write_text_file(trace_path, out);
    }
    return 0;
}

// ---------------------------------------------------------------- fit sat

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            cells.push_back(line.substr(start));
            return cells;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

double parse_double_cell(const std::string& cell, const std::string& path,
                         std::uint64_t lineno) {
    char* end = nullptr;
    double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0')
        throw UserError(path + ": unparsable number '" + cell + "' at line " +
                        std::to_string(lineno));
    return v;
}

// rows of "energy_pj,rate_cps[,int_time_s]" after an optional header
std::vector<SaturationPoint> read_saturation_csv(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw UserError("cannot open: " + path);
    std::string text;
    char buf[4096];
    for (std::size_t got; (got = std::fread(buf, 1, sizeof buf, f)) > 0;)
        text.append(buf, got);
    std::fclose(f);

    std::vector<SaturationPoint> pts;
    std::uint64_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string line = text.substr(
            pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (lineno == 1 && line.find("energy") != std::string::npos) continue;
        std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() < 2 || cells.size() > 3)
            throw UserError(path + ": expected 2 or 3 columns at line " +
                            std::to_string(lineno));
        SaturationPoint pt;
        pt.energy_pj = parse_double_cell(cells[0], path, lineno);
        pt.rate_cps = parse_double_cell(cells[1], path, lineno);
        pt.int_time_s =
            cells.size() == 3 ? parse_double_cell(cells[2], path, lineno) : 1.0;
        pts.push_back(pt);
    }
    if (pts.empty()) throw UserError(path + ": no data rows");
    return pts;
}

int cmd_fit_sat(const std::string& in_path, const std::string& report_path,
                double pulse_duration_s, double rad_lifetime_s) {
    std::vector<SaturationPoint> pts = read_saturation_csv(in_path);
    SaturationFit fit = fit_saturation(pts, pulse_duration_s, rad_lifetime_s);

    std::string excl;
    for (std::size_t i : fit.excluded) {
        if (!excl.empty()) excl += ';';
        excl += std::to_string(i);
    }
    KvPairs kv = {
        {"input", in_path},
        {"n_points", std::to_string(pts.size())},
        {"converged", fit.converged ? "1" : "0"},
        {"iterations", std::to_string(fit.iterations)},
        {"chi2", fmt12(fit.chi2)},
        {"r0_cps", fmt12(fit.r0_cps)},
        {"r0_err", fmt12(fit.r0_err)},
        {"sat_energy_pj", fmt12(fit.sat_energy_pj)},
        {"sat_energy_err", fmt12(fit.sat_energy_err)},
        {"excluded", excl},
    };
    emit(render_kv(kv), report_path);
    return 0;
}

// -------------------------------------------------------------- fit qcurve

QCurve read_qcurve_csv(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw UserError("cannot open: " + path);
    std::string text;
    char buf[4096];
    for (std::size_t got; (got = std::fread(buf, 1, sizeof buf, f)) > 0;)
        text.append(buf, got);
    std::fclose(f);

    QCurve curve;
    std::uint64_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string line = text.substr(
            pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (line.find("window_s") != std::string::npos) continue; // header
        std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != 5)
            throw UserError(path + ": expected 5 columns at line " +
                            std::to_string(lineno));
        QCurvePoint pt;
        pt.k = static_cast<std::uint64_t>(
            parse_double_cell(cells[0], path, lineno));
        pt.window_s = parse_double_cell(cells[1], path, lineno);
        pt.mandel_q = parse_double_cell(cells[2], path, lineno);
        pt.stderr_q = parse_double_cell(cells[3], path, lineno);
        pt.n_windows = static_cast<std::uint64_t>(
            parse_double_cell(cells[4], path, lineno));
        pt.no_signal = false;
        curve.push_back(pt);
    }
    if (curve.empty()) throw UserError(path + ": no data rows");
    return curve;
}

int cmd_fit_qcurve(const std::string& in_path, const std::string& report_path,
                   double eta, double rep_period_s) {
    QCurve curve = read_qcurve_csv(in_path);
    if (rep_period_s <= 0.0) {
        // every row carries window_s = k * rep
        rep_period_s = curve.front().window_s /
                       static_cast<double>(curve.front().k);
    }
    QCurveFit fit = fit_qcurve(curve, eta, rep_period_s);

    KvPairs kv = {
        {"input", in_path},
        {"n_points", std::to_string(fit.n_points)},
        {"converged", fit.converged ? "1" : "0"},
        {"iterations", std::to_string(fit.iterations)},
        {"chi2", fmt12(fit.chi2)},
        {"efficiency", fmt12(eta)},
        {"rep_period_s", fmt12(rep_period_s)},
        {"isc_prob", fmt12(fit.isc_prob)},
        {"isc_prob_err", fmt12(fit.isc_prob_err)},
        {"triplet_lifetime_s", fmt12(fit.triplet_lifetime_s)},
        {"triplet_lifetime_err", fmt12(fit.triplet_lifetime_err)},
        {"regime_flag", fit.regime_flag ? "1" : "0"},
    };
    emit(render_kv(kv), report_path);
    return 0;
}

// --------------------------------------------------------------------- g2

int cmd_g2(const std::string& in_path, const std::string& out_path,
           std::int64_t bin_width_ps, std::int64_t span_ps) {
    TimetagStream s = read_timetags(in_path);
    if (span_ps <= 0) span_ps = 6 * s.rep_period_ps;
    StartStopHistogram h = startstop_histogram(s.records, bin_width_ps, span_ps);

    std::string out;
    out += "# total_pairs=" + std::to_string(h.total_pairs) + "\n";
    out += "# bin_width_ps=" + std::to_string(h.bin_width_ps) + "\n";
    out += "delay_ps,count\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        out += std::to_string(h.center_ps(i));
        out += ',';
        out += std::to_string(h.counts[i]);
        out += '\n';
    }
    emit(out, out_path);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-channel photon statistics: simulate, analyze, fit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "photostat 1.0.0");

    // simulate
    std::string sim_cfg, sim_out = "run.ttg", sim_truth, sim_manifest;
    bool sim_csv = false;
    CLI::App* sim = app.add_subcommand("simulate", "generate a timetag stream");
    sim->add_option("config", sim_cfg, "key=value run configuration")
        ->required();
    sim->add_option("-o,--output", sim_out, "timetag output path");
    sim->add_flag("--csv", sim_csv, "write text instead of binary");
    sim->add_option("--truth", sim_truth, "per-pulse ground-truth CSV");
    sim->add_option("--manifest", sim_manifest,
                    "manifest (config echo + output fingerprints)");

    // analyze
    std::string an_in, an_report, an_qcurve, an_trace;
    std::int64_t an_cutoff = -1;
    std::uint64_t an_kmax = 100000, an_trace_window = 1000, an_trace_stride = 0;
    unsigned an_boot = 200;
    CLI::App* an = app.add_subcommand("analyze", "per-pulse photon statistics");
    an->add_option("timetags", an_in, "timetag file (binary or csv)")
        ->required();
    an->add_option("-o,--report", an_report, "report path (default: stdout)");
    an->add_option("--qcurve", an_qcurve, "write Mandel Q vs window CSV here");
    an->add_option("--trace", an_trace, "write sliding variance CSV here");
    an->add_option("--cutoff-ps", an_cutoff,
                   "acceptance window after each pulse (default: metadata)");
    an->add_option("--kmax", an_kmax, "largest window, in periods");
    an->add_option("--boot", an_boot, "bootstrap replicates for error bars");
    an->add_option("--trace-window", an_trace_window,
                   "sliding window length, in periods");
    an->add_option("--trace-stride", an_trace_stride,
                   "emit every Nth trace row (0: auto)");

    // fit
    CLI::App* fit = app.add_subcommand("fit", "model fits");
    fit->require_subcommand(1);

    std::string fs_in, fs_report;
    double fs_pulse = 1e-13, fs_rad = 2.8e-9;
    CLI::App* fsat = fit->add_subcommand("sat", "saturation curve fit");
    fsat->add_option("points", fs_in, "CSV: energy_pj,rate_cps[,int_time_s]")
        ->required();
    fsat->add_option("-o,--report", fs_report, "report path (default: stdout)");
    fsat->add_option("--pulse-duration", fs_pulse, "excitation pulse length [s]");
    fsat->add_option("--rad-lifetime", fs_rad, "radiative lifetime [s]");

    std::string fq_in, fq_report;
    double fq_eta = 0.0, fq_rep = 0.0;
    CLI::App* fq = fit->add_subcommand("qcurve", "dark-state fit of Q(T)");
    fq->add_option("qcurve", fq_in, "CSV from 'analyze --qcurve'")->required();
    fq->add_option("--eta", fq_eta, "overall detection efficiency")->required();
    fq->add_option("--rep-period", fq_rep,
                   "excitation period [s] (default: from the CSV)");
    fq->add_option("-o,--report", fq_report, "report path (default: stdout)");

    // g2
    std::string g2_in, g2_out;
    std::int64_t g2_bin = 1000, g2_span = 0;
    CLI::App* g2 = app.add_subcommand("g2", "start-stop delay histogram");
    g2->add_option("timetags", g2_in, "timetag file (binary or csv)")
        ->required();
    g2->add_option("-o,--output", g2_out, "histogram CSV (default: stdout)");
    g2->add_option("--bin-width-ps", g2_bin, "histogram bin width [ps]");
    g2->add_option("--span-ps", g2_span,
                   "largest |delay| kept (default: 6 periods)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed())
            return cmd_simulate(sim_cfg, sim_out, sim_csv, sim_truth,
                                sim_manifest);
        if (an->parsed())
            return cmd_analyze(an_in, an_report, an_qcurve, an_trace, an_cutoff,
                               an_kmax, an_boot, an_trace_window,
                               an_trace_stride);
        if (fsat->parsed()) return cmd_fit_sat(fs_in, fs_report, fs_pulse, fs_rad);
        if (fq->parsed()) return cmd_fit_qcurve(fq_in, fq_report, fq_eta, fq_rep);
        if (g2->parsed()) return cmd_g2(g2_in, g2_out, g2_bin, g2_span);
    } catch (const UserError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const TimetagFileError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 1;
    }
    return 1;
}
