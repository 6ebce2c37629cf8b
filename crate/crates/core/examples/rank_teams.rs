//! Ranks teams from per-case lesion-wise scores and prints the leaderboard.
//!
//! cargo run --example rank_teams

use std::collections::BTreeMap;

use lesionwise::ranking::{rank_teams, RankMode, RankingTable, TeamCaseRecord, COLUMNS};
use lesionwise::volume::Region;

fn print(table: &RankingTable) {
    for entry in &table.final_order {
        let row = table.row(&entry.team).expect("row per team");
        let ranks: Vec<String> = row.ranks.iter().map(|r| format!("{r:>5.2}")).collect();
        let tie = if entry.tied { " (tied)" } else { "" };
        println!("{:>2}. {:<8} {} score {:.4}{tie}", entry.position, entry.team, ranks.join(" "), entry.score);
    }
}

fn main() -> lesionwise::Result<()> {
    // (team, per-case dice, per-case hd95), identical across regions for brevity.
    let teams = [
        ("alpha", [0.91, 0.85, 0.70], [4.0, 9.0, 30.0]),
        ("bravo", [0.88, 0.90, 0.75], [5.0, 6.0, 25.0]),
        ("charlie", [0.60, 0.95, 0.40], [60.0, 3.0, 120.0]),
    ];
    let mut records = Vec::new();
    for (team, dice, hd) in teams {
        for case in 0..3 {
            for region in Region::ALL {
                records.push(TeamCaseRecord {
                    team: team.into(),
                    case: format!("case-{case}"),
                    region,
                    lesionwise_dice: dice[case],
                    lesionwise_hd95: hd[case],
                });
            }
        }
    }
    let names: Vec<String> = COLUMNS.iter().map(|(m, r)| format!("{}{}", m.as_str(), r)).collect();
    println!("columns: {}", names.join(" "));
    println!("aggregate mode:");
    print(&rank_teams(&records, RankMode::Aggregate)?);
    println!("per-case mode:");
    print(&rank_teams(&records, RankMode::PerCase)?);

    // Ranks may also come straight from precomputed means.
    let means = BTreeMap::from([
        ("x".to_string(), [0.9, 0.9, 0.9, 10.0, 10.0, 10.0]),
        ("y".to_string(), [0.8, 0.8, 0.8, 20.0, 20.0, 20.0]),
    ]);
    println!("from means:");
    print(&RankingTable::from_aggregates(&means)?);
    Ok(())
}
