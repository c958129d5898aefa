use std::fmt::Write as _;

use super::{EntailmentTask, ReconstructionTask, SelectionTask, TaskInstance};

/// Human-readable name of a domain code; unknown codes are shown as is.
pub fn domain_display_name(code: &str) -> &str {
    match code {
        "ALG" => "Algebra",
        "FLD" => "Fields",
        "GEO" => "Geometry",
        "SET" => "Set Theory",
        "TOP" => "Topology",
        "GRP" => "Group Theory",
        "RNG" => "Ring Theory",
        "LAT" => "Lattice Theory",
        "NUM" => "Number Theory",
        "BOO" => "Boolean Algebra",
        other => other,
    }
}

pub fn render_prompt(task: &TaskInstance) -> String {
    match task {
        TaskInstance::Entailment(t) => entailment(t),
        TaskInstance::Selection(t) => selection(t),
        TaskInstance::Reconstruction(t) => reconstruction(t),
    }
}

fn entailment(t: &EntailmentTask) -> String {
    let mut s = String::new();
    s.push_str("You will be given a logical entailment problem in three parts.\n\n");
    s.push_str("PART 1: CONTEXT\n");
    let _ = writeln!(
        s,
        "The following are general axioms from the domain of **{}**. ",
        domain_display_name(&t.domain)
    );
    s.push_str("They provide definitions and background theory. \n");
    s.push_str("**Do NOT use them directly in the proof.**\n\n");
    for a in &t.context {
        let _ = writeln!(s, "- {a}");
    }
    s.push_str("\n\nPART 2: THE SPECIFIC PROBLEM\n");
    s.push_str("Your task is to evaluate the following specific entailment claim.\n\n");
    s.push_str("**Premises to use:**\n");
    for p in &t.premises {
        let _ = writeln!(s, "- {p}");
    }
    s.push_str("\n\n**Conclusion to prove:**\n");
    let _ = writeln!(s, "{}", t.conjecture);
    s.push_str("\n\nPART 3: YOUR TASK\n");
    s.push_str("Based **only** on the 'Premises to use', does the 'Conclusion to prove' logically follow?\n");
    s.push_str("Answer with a single word: `True` or `False`.\n");
    s
}

fn selection(t: &SelectionTask) -> String {
    let mut s = String::new();
    s.push_str("You are a mathematical logic assistant. \n");
    s.push_str("Your task is to identify a minimal set of premises sufficient for a proof.\n\n");
    s.push_str("## General Context\n");
    let _ = writeln!(
        s,
        "The problem is set in the domain of: **{}**.",
        domain_display_name(&t.domain)
    );
    s.push_str("The following are the fundamental axioms of this domain. \n");
    s.push_str("They provide general context. **Do not use them in the proof itself.**\n");
    s.push_str("Fundamental Axioms:\n");
    for a in &t.context {
        let _ = writeln!(s, "- {a}");
    }
    s.push_str("\n## Task\n");
    s.push_str("Your goal is to prove the following theorem:\n");
    s.push_str("**Theorem:**\n");
    let _ = writeln!(s, "`{}`", t.theorem);
    s.push_str("\nBelow is a numbered pool of potential premises.\n");
    s.push_str("Your task is to identify the **minimal subset** of numbers from this pool \n");
    s.push_str("whose corresponding statements are **sufficient on their own** to prove the theorem.\n\n");
    s.push_str("**Pool of Premises:**\n");
    for (i, p) in t.pool.iter().enumerate() {
        let _ = writeln!(s, "{}. {p}", i + 1);
    }
    s.push_str("\n### Question\n");
    s.push_str("Which is the smallest set of numbered premises from the pool that is sufficient to prove the theorem,\n");
    s.push_str("without using the fundamental axioms from the context?\n\n");
    s.push_str("### Response Format\n");
    s.push_str("Your answer must be **only** a list of numbers, sorted in increasing order. For example: `[2, 5, 8]`.\n");
    s
}

fn reconstruction(t: &ReconstructionTask) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "Your task is to reconstruct the dependency graph of a mathematical proof from the domain of **{}**.\n",
        domain_display_name(&t.domain)
    );
    s.push_str("The proof graph concludes with the theorem: \n");
    let _ = writeln!(s, "`{}`\n", t.clauses[t.theorem_index - 1]);
    s.push_str("## Proof Context & Rules\n");
    s.push_str("This proof was generated by using the **Superposition Calculus** (which includes rules like Resolution and Paramodulation).\n\n");
    s.push_str("Therefore, the proof has the following properties:\n");
    s.push_str("- **Starting Points:** Some clauses in the list are starting points (axioms) and are not derived from other clauses.\n");
    s.push_str("- **Derived Clauses:** Every other clause is derived from exactly **two** parent clauses from the list.\n");
    s.push_str("- **Clause Reuse:** A single clause can be used as a parent in multiple derivation steps.\n\n");
    s.push_str("## Your Task\n");
    s.push_str("Given the rules above, reconstruct the proof from the following shuffled list of clauses.\n");
    s.push_str("Identify the derivation for every clause that is not a starting point.\n\n");
    s.push_str("**Shuffled Clauses:**\n");
    for (i, c) in t.clauses.iter().enumerate() {
        let _ = writeln!(s, "{}. {c}", i + 1);
    }
    s.push_str("\n## Required Output Format\n");
    s.push_str("- List **only** the derivation steps.\n");
    s.push_str("- Each step must be on a new line.\n");
    s.push_str("- Use the exact format `CHILD <- PARENT_1, PARENT_2`. Example: `5 <- 2, 4`.\n");
    s.push_str("- All clauses from the list must be used in the final structure.\n");
    s.push_str("- No explanations, comments, or extra text.\n");
    s
}
