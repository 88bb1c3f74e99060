#include "replimeta/report.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "replimeta/csv.hpp"
#include "replimeta/descriptives.hpp"
#include "replimeta/effect_size.hpp"
#include "replimeta/lmm.hpp"
#include "replimeta/meta.hpp"
#include "replimeta/plots.hpp"
#include "replimeta/pvalue_pool.hpp"
#include "replimeta/simulation.hpp"
#include "replimeta/ttest.hpp"

namespace replimeta {

namespace {

std::string d3(double v) { return fixed(v, 3); }
std::string u2(double v) { return fixed(v, 2); }
std::string pct(double v) { return fixed(v, 1); }
std::string level_text(double alpha) { return fmt::format("{:g}%", 100.0 * (1.0 - alpha)); }

const char* yes_no(bool b) { return b ? "yes" : "no"; }

/// Runs one step body, tagging any failure with the step name.
template <class F>
Section guarded(std::string_view step, F&& body) {
  try {
    return body();
  } catch (const MissingInput&) {
    throw;
  } catch (const ConfigError& e) {
    throw StepError(fmt::format("{}: {}", step, e.what()), true);
  } catch (const DataError& e) {
    throw StepError(fmt::format("{}: {}", step, e.what()), true);
  } catch (const std::invalid_argument& e) {
    throw StepError(fmt::format("{}: {}", step, e.what()), true);
  } catch (const std::domain_error& e) {
    throw StepError(fmt::format("{}: {}", step, e.what()), true);
  } catch (const StepError&) {
    throw;
  } catch (const std::exception& e) {
    throw StepError(fmt::format("{}: {}", step, e.what()), false);
  }
}

const ReplicationSet& need_raw(const Inputs& in, std::string_view step) {
  if (!in.raw) {
    throw MissingInput(fmt::format("{} needs participant-level data (inputs.raw)", step));
  }
  return *in.raw;
}

/// Experiment-level labels from the config, else from the covariates'
/// subject type when it is constant within every experiment.
std::map<std::string, std::string> experiment_labels(const AnalysisConfig& c, const Inputs& in) {
  if (!c.experiment_labels.empty()) return c.experiment_labels;
  std::map<std::string, std::string> labels;
  if (!in.covariates) return labels;
  for (const auto& row : in.covariates->rows()) {
    const std::string type(to_string(row.subject_type));
    const auto [it, inserted] = labels.emplace(row.experiment_id, type);
    if (!inserted && it->second != type) return {};
  }
  return labels;
}

std::vector<EffectSize> ad_effects(const AnalysisConfig& c, const Inputs& in,
                                   std::string* source) {
  const EffectSizeOptions opts{c.hedges};
  std::vector<EffectSize> effects;
  if (in.summary) {
    effects = effect_sizes(*in.summary, opts);
    if (source) *source = "summary statistics file";
  } else if (in.raw) {
    for (const auto& rep : in.raw->replications()) effects.push_back(effect_size(rep, opts));
    if (source) *source = "participant-level data (complete pairs only)";
  } else {
    throw MissingInput("aggregate needs summary statistics or participant-level data");
  }
  return effects;
}

void add_meta_row(Table& t, std::string_view label, const MetaResult& m) {
  t.add_row({std::string(label), std::string(to_string(m.model)), std::to_string(m.k),
             d3(m.pooled), d3(m.se), d3(m.ci_low), d3(m.ci_high), p_text(m.p_value), fixed(m.tau2, 4),
             d3(m.q), std::to_string(m.q_df), p_text(m.q_p), pct(m.i2),
             std::string(heterogeneity_label(m.i2))});
}

Table meta_table(std::string name, std::string caption, double alpha) {
  return Table{std::move(name),
               std::move(caption),
               {"group", "model", "k", "estimate", "se", fmt::format("ci_low_{}", level_text(alpha)),
                fmt::format("ci_high_{}", level_text(alpha)), "p_value", "tau2", "q", "q_df", "q_p",
                "i2_percent", "heterogeneity"},
               {}};
}

Table fixed_effect_table(std::string name, std::string caption, double alpha) {
  return Table{std::move(name),
               std::move(caption),
               {"term", "estimate", "se", "df", fmt::format("ci_low_{}", level_text(alpha)),
                fmt::format("ci_high_{}", level_text(alpha)), "p_value"},
               {}};
}

void add_fixed_row(Table& t, std::string label, const FixedEffect& f,
                   std::vector<std::string> extra = {}) {
  std::vector<std::string> row{std::move(label), u2(f.estimate), u2(f.se),
                               std::isinf(f.df) ? "inf" : fixed(f.df, 0), u2(f.ci_low),
                               u2(f.ci_high), p_text(f.p_value)};
  row.insert(row.end(), extra.begin(), extra.end());
  t.add_row(std::move(row));
}

std::string safe_file_part(std::string_view s) {
  std::string out;
  for (const char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
    out.push_back(ok ? static_cast<char>(std::tolower(static_cast<unsigned char>(c))) : '_');
  }
  return out;
}

std::string quote_block(std::string_view text) {
  std::string out = "> ";
  for (const char c : text) {
    out.push_back(c);
    if (c == '\n') out += "> ";
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

Inputs load_inputs(const AnalysisConfig& config) {
  Inputs in;
  auto hash = [&](const std::filesystem::path& p) {
    if (!std::filesystem::exists(p)) {
      throw ConfigError(fmt::format("input file '{}' does not exist", p.generic_string()));
    }
    in.hashes[p.generic_string()] = file_hash(p);
  };
  if (config.raw) {
    hash(*config.raw);
    in.raw = load_raw_dataset(*config.raw, config.parse_options());
  }
  if (config.summary) {
    hash(*config.summary);
    in.summary = load_summary_dataset(*config.summary);
  }
  if (config.covariates) {
    if (!in.raw) throw ConfigError("a covariate file needs participant-level data (inputs.raw)");
    hash(*config.covariates);
    in.covariates = load_covariates(*config.covariates, *in.raw);
  }
  return in;
}

void Section::text(std::string block) { blocks.push_back(std::move(block)); }

void Section::table(Table t) {
  blocks.push_back(t.markdown() + fmt::format("\n_Data: `{}.csv`_", t.name));
  tables.push_back(std::move(t));
}

void Section::figure(Figure f) {
  blocks.push_back(fmt::format("![{}]({})", f.caption, f.file));
  figures.push_back(std::move(f));
}

std::string Section::markdown() const {
  std::string out = fmt::format("## {}\n", title);
  for (const auto& b : blocks) out += "\n" + b + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Step 1

Section step_describe(const AnalysisConfig& config, const Inputs& inputs) {
  return guarded("describe", [&] {
    Section s{"Step 1: Describe participants", StepKind::descriptive, {}, {}, {}, {}};
    if (!inputs.covariates) {
      throw MissingInput("describe needs a covariate file (inputs.covariates)");
    }
    Warnings warnings;
    const auto summaries = summarize_covariates(*inputs.covariates, &warnings);
    Table t{"participant_characteristics",
            "Participant characteristics per experiment (1 = inexperienced ... 4 = expert): mean and sd",
            {"experiment", "n"},
            {}};
    for (const auto c : kAllCovariates) {
      t.header.push_back(fmt::format("{}_mean", to_string(c)));
      t.header.push_back(fmt::format("{}_sd", to_string(c)));
    }
    for (const auto& cs : summaries) {
      std::vector<std::string> row{cs.experiment_id, std::to_string(cs.n)};
      for (const auto c : kAllCovariates) {
        row.push_back(u2(cs.mean_of(c)));
        row.push_back(u2(cs.sd_of(c)));
      }
      t.add_row(std::move(row));
    }
    s.table(std::move(t));
    for (const auto& w : warnings) s.text("Note: " + w);
    PlotOptions po;
    po.title = "Profile plot: participant experience";
    s.figure({"profile_covariates.svg", "Profile plot of mean participant experience",
              render_profile(profile_series_covariates(*inputs.covariates), po)});
    (void)config;
    return s;
  });
}

// ---------------------------------------------------------------------------
// Step 2

Section step_individual(const AnalysisConfig& config, const Inputs& inputs) {
  return guarded("individual", [&] {
    const auto& data = need_raw(inputs, "individual");
    Section s{"Step 2: Analyze individual replications", StepKind::descriptive, {}, {}, {}, {}};

    Warnings warnings;
    const auto rows = summarize_replications(data, &warnings);
    Table desc{"descriptive_statistics",
               fmt::format("Descriptive statistics for {} per experiment and treatment",
                           data.outcome_name()),
               {"experiment", "treatment", "n", "mean", "sd", "median", "corr"},
               {}};
    for (const auto& r : rows) {
      const auto corr = r.corr ? u2(*r.corr) : std::string("NA");
      desc.add_row({r.experiment_id, config.levels.control, std::to_string(r.n_control),
                    u2(r.mean_control), u2(r.sd_control), u2(r.median_control.value_or(NAN)), corr});
      desc.add_row({r.experiment_id, config.levels.treatment, std::to_string(r.n_treatment),
                    u2(r.mean_treatment), u2(r.sd_treatment), u2(r.median_treatment.value_or(NAN)),
                    corr});
    }
    s.table(std::move(desc));
    for (const auto& w : warnings) s.text("Note: " + w);
    s.text("No outliers are removed: every observation enters every analysis.");

    PlotOptions box;
    box.title = fmt::format("Box and violin plot: {} vs {}", config.levels.control,
                            config.levels.treatment);
    s.figure({"box_violin.svg", "Box and violin plots per experiment and treatment",
              render_box_violin(box_groups(data, config.levels), box)});
    PlotOptions prof;
    prof.title = fmt::format("Profile plot: {} vs {}", config.levels.control, config.levels.treatment);
    s.figure({"profile_outcome.svg", "Profile plot of arm means per experiment",
              render_profile(profile_series_outcomes(data, config.levels), prof)});

    TTestOptions opts;
    opts.alpha = config.alpha_main;
    opts.paired_df = config.paired_df;
    Table tt{"individual_analyses",
             fmt::format("Individual analyses ({} minus {}), two-sided", config.levels.treatment,
                         config.levels.control),
             {"experiment", "test", "estimate", "se", "df", fmt::format("ci_low_{}", level_text(opts.alpha)),
              fmt::format("ci_high_{}", level_text(opts.alpha)), "p_value",
              fmt::format("significant_at_{:g}", opts.alpha)},
             {}};
    for (const auto& rep : data.replications()) {
      const auto r = individual_analysis(rep, opts);
      const std::string test = rep.design() == Design::within_subjects
                                   ? fmt::format("dependent t ({})", to_string(opts.paired_df))
                                   : (opts.welch ? "Welch t" : "pooled-variance t");
      tt.add_row({r.experiment_id, test, u2(r.estimate), u2(r.se), fixed(r.df, 0), u2(r.ci_low),
                  u2(r.ci_high), p_text(r.p_value), yes_no(r.p_value <= opts.alpha)});
    }
    s.table(std::move(tt));
    return s;
  });
}

// ---------------------------------------------------------------------------
// Step 3

Section step_aggregate(const AnalysisConfig& config, const Inputs& inputs) {
  return guarded("aggregate", [&] {
    Section s{"Step 3: Aggregate results (confirmatory)", StepKind::confirmatory, {}, {}, {}, {}};
    s.text(fmt::format(
        "Main analysis. Random-effects models throughout; alpha = {:g}. AD and IPD-S are "
        "reported side by side.",
        config.alpha_main));

    // AD
    std::string source;
    const auto effects = ad_effects(config, inputs, &source);
    const auto meta = pool_random(effects, config.tau2, config.alpha_main);
    s.text(fmt::format("### Aggregated data (AD)\n\nEffect sizes from the {}; {} d{}.", source,
                       config.hedges ? "Hedges-corrected" : "uncorrected Cohen's",
                       config.hedges ? " (g)" : ""));
    Table es{"effect_sizes",
             "Standardized mean differences per experiment",
             {"experiment", "d", "variance", "n_effective", fmt::format("ci_low_{}", level_text(config.alpha_main)),
              fmt::format("ci_high_{}", level_text(config.alpha_main)), "weight_percent", "corrected"},
             {}};
    const auto forest = forest_model(effects, meta);
    for (std::size_t i = 0; i < effects.size(); ++i) {
      const auto& e = effects[i];
      const auto& row = forest.studies[i];
      es.add_row({e.experiment_id, d3(e.d), fixed(e.variance, 4), std::to_string(e.n_effective),
                  d3(row.ci_low), d3(row.ci_high), pct(row.weight_percent), yes_no(e.corrected)});
    }
    s.table(std::move(es));
    Table mt = meta_table("meta_analysis",
                          fmt::format("Random-effects meta-analysis ({} tau^2)", to_string(config.tau2)),
                          config.alpha_main);
    add_meta_row(mt, "all", meta);
    s.table(std::move(mt));
    for (const auto& w : meta.warnings) s.text("Note: " + w);
    s.text(fmt::format("Heterogeneity is {} (I² = {}%, thresholds 25/50/75%).",
                       heterogeneity_label(meta.i2), pct(meta.i2)));
    ForestOptions fo;
    fo.title = fmt::format("Forest plot: {} vs {}", config.levels.control, config.levels.treatment);
    s.figure({"forest.svg", "Forest plot", render_forest(forest, fo)});

    // IPD-S
    s.text("### Stratified individual participant data (IPD-S)");
    if (!inputs.raw) {
      s.text(
          "IPD-S not run: it needs participant-level data (inputs.raw). Only the AD results above "
          "are available from summary statistics.");
      return s;
    }
    const auto& data = *inputs.raw;
    FitOptions fopt;
    fopt.df_rule = config.df_rule;
    fopt.alpha = config.alpha_main;
    const auto fit = fit_lmm_reml(data, {}, fopt);
    Table lt = fixed_effect_table(
        "lmm_results",
        fmt::format("Linear mixed model (REML; random experiment intercept and treatment slope, "
                    "random participant intercept; df rule {})",
                    to_string(fit.df_rule)),
        fit.alpha);
    add_fixed_row(lt, config.levels.control, fit.control_mean);
    add_fixed_row(lt, config.levels.treatment, fit.treatment_mean);
    add_fixed_row(lt, "M_diff", fit.treatment_effect());
    lt.add_row({"sd_diff", u2(fit.variance.sd_diff()), "", "", "", "", ""});
    lt.add_row({fmt::format("ratio {}/{}", config.levels.treatment, config.levels.control),
                u2(fit.ratio), "", "", "", "", ""});
    s.table(std::move(lt));
    s.text(fmt::format(
        "The {} cell mean is {} times the {} cell mean. sd_diff / M_diff = {}: the spread of "
        "the treatment effect across experiments relative to its mean.",
        config.levels.treatment, u2(fit.ratio), config.levels.control,
        u2(fit.variance.sd_diff() / fit.treatment_effect().estimate)));
    if (!fit.converged) {
      s.text("Warning: the REML optimizer did not converge; estimates are the best point found.");
    }
    for (const auto& w : fit.warnings) s.text("Note: " + w);

    Table dt = fixed_effect_table("lmm_df_rules", "Treatment effect under both df rules",
                                  config.alpha_main);
    for (const auto rule : {DfRule::z, DfRule::experiments_minus_one}) {
      add_fixed_row(dt, std::string(to_string(rule)), fit.with_inference(rule, config.alpha_main).treatment_effect());
    }
    s.table(std::move(dt));
    s.text(
        "Rows with a missing outcome are left out of the likelihood; participants observed under "
        "one treatment only still contribute (valid when data are missing at random).");

    const auto anova = fit_ols(data, true, config.anova_missing, config.alpha_main);
    Table at = fixed_effect_table(
        "ipd_s_anova",
        fmt::format("Fixed-effects ANOVA with treatment and experiment factors ({})",
                    config.anova_missing == MissingPolicy::complete_pairs ? "complete pairs"
                                                                          : "all observations"),
        config.alpha_main);
    add_fixed_row(at, "treatment", anova.treatment_effect());
    s.table(std::move(at));

    if (config.ipd_mt) {
      s.text("### Mega-trial analysis (IPD-MT), for comparison only\n\n" +
             quote_block(kGuideline2Warning));
      TTestOptions topt;
      topt.alpha = config.alpha_main;
      topt.paired_df = config.paired_df;
      const auto pooled = pooled_paired_t(data, topt);
      const auto mt_ols = fit_ols(data, false, MissingPolicy::all_observations, config.alpha_main);
      Table it = fixed_effect_table("ipd_mt", "IPD-MT estimates (experiment ignored)",
                                    config.alpha_main);
      add_fixed_row(it, "pooled dependent t",
                    FixedEffect{"", pooled.estimate, pooled.se, pooled.statistic, pooled.df,
                                pooled.ci_low, pooled.ci_high, pooled.p_value});
      add_fixed_row(it, "ANOVA without experiment", mt_ols.treatment_effect());
      s.table(std::move(it));
    }

    if (config.p_pooling) {
      s.text("### p-value pooling and vote counting, for comparison only\n\n" +
             quote_block(kGuideline1Warning));
      TTestOptions two;
      two.alpha = config.alpha_main;
      two.paired_df = config.paired_df;
      TTestOptions one = two;
      one.sidedness = config.pooling_sidedness;
      std::vector<TestResult> tests;
      std::vector<double> ps;
      for (const auto& rep : data.replications()) {
        tests.push_back(individual_analysis(rep, two));
        ps.push_back(individual_analysis(rep, one).p_value);
      }
      std::vector<std::string> notes;
      const auto clamped = clamp_p_values(ps, &notes);
      const auto vc = vote_count(tests, config.alpha_main);
      const auto fisher = fisher_pool(clamped);
      const auto stouffer = stouffer_pool(clamped);
      Table pt{"p_value_pooling",
               fmt::format("Pooled {} p-values and vote count", to_string(config.pooling_sidedness)),
               {"method", "statistic", "df", "p_value", "summary"},
               {}};
      pt.add_row({"fisher", u2(fisher.statistic), std::to_string(fisher.df), p_text(fisher.p_value), ""});
      pt.add_row({"stouffer", u2(stouffer.statistic), "", p_text(stouffer.p_value), ""});
      pt.add_row({"vote count", "", "", "",
                  fmt::format("{} significant positive, {} significant negative, {} non-significant: {}",
                              vc.significant_positive, vc.significant_negative, vc.non_significant,
                              to_string(vc.verdict))});
      s.table(std::move(pt));
      for (const auto& n : notes) s.text("Note: " + n);
    }
    return s;
  });
}

// ---------------------------------------------------------------------------
// Step 4

Section step_moderators(const AnalysisConfig& config, const Inputs& inputs) {
  return guarded("moderators", [&] {
    Section s{"Step 4: Exploratory analyses", StepKind::exploratory, {}, {}, {}, {}};
    s.text(quote_block(kGuideline6Text));
    s.text(fmt::format(
        "Moderator effects are flagged as candidates at alpha = {:g}; intervals are {} intervals.",
        config.alpha_moderator, level_text(config.alpha_moderator)));
    const double am = config.alpha_moderator;

    // Experiment-level: AD subgroups and IPD-S interaction side by side.
    s.text("### Experiment-level moderator");
    const auto labels = experiment_labels(config, inputs);
    if (labels.empty()) {
      s.text("Not run: no experiment labels (config experiment_labels or covariate subject_type).");
    } else {
      std::vector<EffectSize> effects;
      if (inputs.summary || inputs.raw) {
        effects = ad_effects(config, inputs, nullptr);
        for (auto& e : effects) {
          const auto it = labels.find(e.experiment_id);
          if (it == labels.end()) {
            throw ConfigError(fmt::format("no experiment label for '{}'", e.experiment_id));
          }
          e.subgroup_label = it->second;
        }
        // Groups in sorted label order so the difference is (second - first).
        std::stable_sort(effects.begin(), effects.end(), [](const auto& a, const auto& b) {
          return *a.subgroup_label < *b.subgroup_label;
        });
        const auto sg = subgroup_analysis(effects, config.subgroup_tau2, am);
        Table st = meta_table("subgroup_meta_analysis",
                              fmt::format("AD subgroup meta-analysis ({} tau^2 per group)",
                                          to_string(config.subgroup_tau2)),
                              am);
        for (std::size_t g = 0; g < sg.groups.size(); ++g) add_meta_row(st, sg.labels[g], sg.groups[g]);
        if (sg.has_difference) {
          st.add_row({fmt::format("difference {} - {}", sg.labels[1], sg.labels[0]), "", "",
                      d3(sg.difference), d3(sg.difference_se), d3(sg.difference_ci_low),
                      d3(sg.difference_ci_high), p_text(sg.difference_p), "", "", "", "", "",
                      sg.difference_p <= am ? "candidate moderator" : ""});
        }
        s.table(std::move(st));
        for (std::size_t g = 0; g < sg.groups.size(); ++g) {
          std::vector<EffectSize> group;
          for (const auto& e : effects) {
            if (*e.subgroup_label == sg.labels[g]) group.push_back(e);
          }
          ForestOptions fo;
          fo.title = fmt::format("Forest plot: {}", sg.labels[g]);
          s.figure({fmt::format("forest_{}.svg", safe_file_part(sg.labels[g])),
                    fmt::format("Forest plot for subgroup {}", sg.labels[g]),
                    render_forest(forest_model(group, sg.groups[g]), fo)});
        }
      }
      if (inputs.raw) {
        FitOptions fo;
        fo.df_rule = config.df_rule;
        fo.alpha = am;
        const auto fit = moderator_experiment_level(*inputs.raw, labels, fo);
        Table xt = fixed_effect_table("lmm_experiment_moderator",
                                      "IPD-S linear mixed model with an experiment-level interaction",
                                      am);
        xt.header.push_back("candidate");
        for (const auto& f : fit.fixed) {
          if (f.name.rfind("treatment:", 0) != 0) continue;
          add_fixed_row(xt, f.name, f, {yes_no(f.p_value <= am)});
        }
        s.table(std::move(xt));
      } else {
        s.text("IPD-S interaction not run: it needs participant-level data (inputs.raw).");
      }
    }

    // Participant-level: IPD-S interactions, with the AD meta-regression on
    // experiment means shown alongside as the ecological counterpart.
    s.text("### Participant-level moderators");
    if (!inputs.raw || !inputs.covariates) {
      s.text("Not run: participant-level moderators need participant-level data and covariates.");
      return s;
    }
    FitOptions fo;
    fo.df_rule = config.df_rule;
    fo.alpha = am;
    Table pt = fixed_effect_table(
        "lmm_participant_moderators",
        fmt::format("IPD-S interactions with participant experience ({} mode), one model per "
                    "covariate",
                    to_string(config.separation)),
        am);
    pt.header.push_back("candidate");
    std::vector<InteractionPanel> panels;
    std::vector<std::string> notes;
    for (const auto c : kAllCovariates) {
      const auto fit = moderator_participant_level(*inputs.raw, *inputs.covariates, c,
                                                   config.separation, fo);
      const auto& f = fit.effect(interaction_name(fit));
      add_fixed_row(pt, std::string(display_name(c)), f, {yes_no(f.p_value <= am)});
      panels.push_back(interaction_panel(fit, std::string(display_name(c))));
      for (const auto& w : fit.warnings) {
        if (std::find(notes.begin(), notes.end(), w) == notes.end()) notes.push_back(w);
      }
    }
    s.table(std::move(pt));
    for (const auto& n : notes) s.text("Note: " + n);
    PlotOptions io;
    io.title = "Treatment effect by participant experience";
    s.figure({"interactions.svg", "Fitted treatment effect over experience levels 1 to 4",
              render_interactions(panels, io)});

    const auto cov_means = summarize_covariates(*inputs.covariates);
    std::vector<EffectSize> base;
    try {
      base = ad_effects(config, inputs, nullptr);
    } catch (const MissingInput&) {
    }
    if (base.size() >= 3) {
      Table rt{"meta_regression",
               "AD meta-regression of d on the experiment mean of each covariate (ecological; "
               "prone to aggregation bias)",
               {"covariate", "slope", "se", fmt::format("ci_low_{}", level_text(am)),
                fmt::format("ci_high_{}", level_text(am)), "p_value", "tau2_residual"},
               {}};
      for (const auto c : kAllCovariates) {
        std::vector<EffectSize> eff;
        for (auto e : base) {
          const auto it = std::find_if(cov_means.begin(), cov_means.end(),
                                       [&](const auto& m) { return m.experiment_id == e.experiment_id; });
          if (it == cov_means.end()) continue;
          e.moderator_x = it->mean_of(c);
          eff.push_back(e);
        }
        std::set<double> xs;
        for (const auto& e : eff) xs.insert(*e.moderator_x);
        if (eff.size() < 3 || xs.size() < 2) continue;
        const auto mr = meta_regression(eff, am);
        rt.add_row({std::string(display_name(c)), d3(mr.slope.estimate), d3(mr.slope.se),
                    d3(mr.slope.ci_low), d3(mr.slope.ci_high), p_text(mr.slope.p_value),
                    fixed(mr.tau2, 4)});
      }
      if (!rt.rows.empty()) s.table(std::move(rt));
    }
    return s;
  });
}

// ---------------------------------------------------------------------------
// Simulation

Section step_simulate(const AnalysisConfig& config) {
  return guarded("simulate", [&] {
    Section s{"IPD-MT bias demonstration (simulation)", StepKind::simulation, {}, {}, {}, {}};
    s.text(quote_block(kGuideline2Warning));
    const auto& spec = config.scenario;
    Table sc{"simulation_scenario",
             "Simulated between-subjects replications (normal outcomes)",
             {"experiment", "control_mean", "control_sd", "control_n", "treatment_mean",
              "treatment_sd", "treatment_n"},
             {}};
    for (const auto& e : spec.experiments) {
      sc.add_row({e.id, u2(e.control.mean), u2(e.control.sd), std::to_string(e.control.n),
                  u2(e.treatment.mean), u2(e.treatment.sd), std::to_string(e.treatment.n)});
    }
    s.table(std::move(sc));
    const auto report = compare_mt_vs_s(spec);
    Table bt{"simulation_bias",
             fmt::format("Estimator comparison over {} iterations (seed {})", report.n_iterations,
                         report.seed),
             {"estimator", "analytic", "mean", "sd", "lower_99", "upper_99"},
             {}};
    for (const auto* e : {&report.ipd_mt, &report.ipd_s}) {
      bt.add_row({e->name, fixed(e->analytic, 3), fixed(e->mean, 3), fixed(e->sd, 3),
                  fixed(e->lower_99, 3), fixed(e->upper_99, 3)});
    }
    s.table(std::move(bt));
    Table raw{"simulation_estimates", "", {"iteration", "ipd_mt", "ipd_s"}, {}};
    for (std::size_t i = 0; i < report.ipd_mt.estimates.size(); ++i) {
      raw.add_row({std::to_string(i), csv::format_exact(report.ipd_mt.estimates[i]),
                   csv::format_exact(report.ipd_s.estimates[i])});
    }
    s.data_files.push_back(std::move(raw));
    s.text("Per-iteration estimates: `simulation_estimates.csv`.");
    return s;
  });
}

// ---------------------------------------------------------------------------

std::string build_report(const AnalysisConfig& config, const Inputs& inputs,
                         const std::vector<Section>& sections,
                         const std::vector<std::string>& notes) {
  std::string out = "# Joint analysis of a group of replications\n\n";
  out += fmt::format("Outcome: {}{}. Treatment levels: control = {}, treatment = {}.\n",
                     config.outcome_name,
                     config.outcome_unit.empty() ? "" : fmt::format(" ({})", config.outcome_unit),
                     config.levels.control, config.levels.treatment);
  out += "\nSteps 1 and 2 describe the data, Step 3 is the confirmatory analysis and Step 4 is "
         "exploratory.\n";
  for (const auto& n : notes) out += "\nNote: " + n + "\n";
  for (const auto& s : sections) out += "\n" + s.markdown();

  out += "\n## Provenance\n\n";
  out += fmt::format("Tool: replimeta {}\n\n", kVersion);
  if (!inputs.hashes.empty()) {
    out += "| input | fnv1a64 |\n|:---|:---|\n";
    for (const auto& [path, hash] : inputs.hashes) out += fmt::format("| {} | {} |\n", path, hash);
    out += "\n";
  }
  out += "Configuration:\n\n```json\n" + to_json(config).dump(2) + "\n```\n";
  return out;
}

std::vector<std::filesystem::path> write_section(const Section& section,
                                                 const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  for (const auto* list : {&section.tables, &section.data_files}) {
    for (const auto& t : *list) {
      const auto p = dir / (t.name + ".csv");
      write_file_atomic(p, t.csv());
      written.push_back(p);
    }
  }
  for (const auto& f : section.figures) {
    const auto p = dir / f.file;
    write_file_atomic(p, f.document.str());
    written.push_back(p);
  }
  return written;
}

namespace {

template <class Step>
std::vector<std::filesystem::path> run_one(const AnalysisConfig& config, Step step) {
  config.validate();
  Inputs inputs;
  try {
    inputs = load_inputs(config);
  } catch (const DataError& e) {
    throw StepError(fmt::format("loading inputs: {}", e.what()), true);
  }
  return write_section(step(config, inputs), config.out_dir);
}

}  // namespace

std::vector<std::filesystem::path> cmd_describe(const AnalysisConfig& config) {
  return run_one(config, step_describe);
}
std::vector<std::filesystem::path> cmd_individual(const AnalysisConfig& config) {
  return run_one(config, step_individual);
}
std::vector<std::filesystem::path> cmd_aggregate(const AnalysisConfig& config) {
  return run_one(config, step_aggregate);
}
std::vector<std::filesystem::path> cmd_moderators(const AnalysisConfig& config) {
  return run_one(config, step_moderators);
}
std::vector<std::filesystem::path> cmd_simulate(const AnalysisConfig& config) {
  config.validate();
  return write_section(step_simulate(config), config.out_dir);
}

std::vector<std::filesystem::path> cmd_report(const AnalysisConfig& config) {
  const auto notes = config.validate();
  Inputs inputs;
  try {
    inputs = load_inputs(config);
  } catch (const DataError& e) {
    throw StepError(fmt::format("loading inputs: {}", e.what()), true);
  }
  if (!inputs.raw && !inputs.summary) {
    throw MissingInput("report needs participant-level data or summary statistics");
  }
  std::vector<Section> sections;
  auto attempt = [&](auto step, std::string title) {
    try {
      sections.push_back(step(config, inputs));
    } catch (const MissingInput& e) {
      Section s{std::move(title), StepKind::descriptive, {}, {}, {}, {}};
      s.text(fmt::format("Not run: {}.", e.what()));
      sections.push_back(std::move(s));
    }
  };
  attempt(step_describe, "Step 1: Describe participants");
  attempt(step_individual, "Step 2: Analyze individual replications");
  attempt(step_aggregate, "Step 3: Aggregate results (confirmatory)");
  attempt(step_moderators, "Step 4: Exploratory analyses");
  if (config.ipd_mt) sections.push_back(step_simulate(config));

  std::vector<std::filesystem::path> written;
  for (const auto& s : sections) {
    auto w = write_section(s, config.out_dir);
    written.insert(written.end(), w.begin(), w.end());
  }
  const auto report_path = config.out_dir / "report.md";
  write_file_atomic(report_path, build_report(config, inputs, sections, notes));
  written.push_back(report_path);
  return written;
}

}  // namespace replimeta
