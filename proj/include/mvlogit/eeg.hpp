#pragma once

#include "mvlogit/model.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mvlogit {

inline constexpr Index kEegSamples = 256;
inline constexpr Index kEegChannels = 64;

/// Electrode names in the channel order of the UCI EEG recordings.
const std::vector<std::string>& canonical_eeg_channels();

enum class EegCondition { SingleStimulus, Matched, Unmatched };

/// "S1 obj", "S2 match", "S2 nomatch".
std::string to_string(EegCondition c);

/// Accepts s1/single/"S1 obj", match/matched/"S2 match", nomatch/unmatched/"S2 nomatch";
/// "all" gives nullopt.
std::optional<EegCondition> eeg_condition_from_string(const std::string& name);

/// One complete trial. voltages is samples x channels (256 x 64) in the
/// canonical channel order.
struct EegTrialRecord {
    std::string subject;
    bool alcoholic = false;
    int trial = 0;
    EegCondition condition = EegCondition::SingleStimulus;
    bool error_flag = false;  // the recording marked the trial "err"
    Matrix voltages;
    std::string source;
};

struct EegRejection {
    std::string source;
    std::string subject;
    int trial = -1;
    std::string reason;
};

/// Raised in strict mode for a trial that would otherwise be skipped.
class EegTrialError : public ValidationError {
public:
    explicit EegTrialError(EegRejection r);
    const EegRejection& rejection() const { return rejection_; }

private:
    EegRejection rejection_;
};

struct EegParseResult {
    std::vector<EegTrialRecord> trials;
    std::vector<EegRejection> rejected;
};

/// Parses one trial file: '#' header lines, then rows of either
/// "trial channel sample value" or "channel sample value". Incomplete
/// trials go to `rejected`; a malformed line throws ValidationError naming
/// source:line. The subject comes from the first header line, else from
/// the file name up to the first '.'.
EegParseResult parse_eeg_stream(std::istream& in, const std::string& source);
EegParseResult parse_eeg_file(const std::filesystem::path& path);

/// Group from the subject name: fourth character 'a' (alcoholic) or 'c'.
bool eeg_subject_is_alcoholic(const std::string& subject);

struct EegIngestOptions {
    std::optional<EegCondition> condition = EegCondition::SingleStimulus;
    bool keep_error_trials = false;
    bool strict = false;  // rethrow the first rejection as EegTrialError
    int threads = 1;
};

struct EegSubjectSummary {
    std::string subject;
    bool alcoholic = false;
    int retained = 0;
};

struct EegIngest {
    /// One averaged 256 x 64 matrix per subject, sorted by subject id;
    /// label 1 = alcoholic.
    MatrixDataset data;
    std::vector<std::string> channels;
    std::vector<EegSubjectSummary> subjects;
    std::vector<EegRejection> rejected;
    std::vector<std::string> skipped_files;  // compressed or hidden
    int files_read = 0;
};

/// Reads every regular file under `directory` (recursively, sorted by
/// path), keeps the trials matching the condition, and averages them per
/// subject. Throws ValidationError when a subject seen in the files keeps
/// no trials, or when nothing is left.
EegIngest ingest_eeg(const std::filesystem::path& directory, const EegIngestOptions& options = {});

struct EegFixtureOptions {
    int alcoholic = 26;
    int control = 14;
    int trials = 2;        // single-stimulus trials per subject
    int other_trials = 1;  // matched-condition trials per subject, ignored by the default filter
    std::uint64_t seed = 11;
    double effect = 4.0;   // group difference of the evoked amplitude, in microvolts
};

/// Writes a synthetic recording set in the UCI layout,
/// <dir>/<subject>/<subject>.rd.<nnn>. Returns the number of files written.
int write_eeg_fixture(const std::filesystem::path& directory, const EegFixtureOptions& options = {});

}  // namespace mvlogit
