//! Run every reproduction recipe at reduced size.

use sensor_game::recipes::{run_recipe, RecipeParams, RECIPES};

fn main() -> sensor_game::Result<()> {
    for name in RECIPES {
        let d = RecipeParams::defaults(name);
        let params = RecipeParams { samples: d.samples.min(20), max_n: d.max_n.min(8), ..d };
        println!("{}", run_recipe(name, &params)?.summary());
    }
    Ok(())
}
