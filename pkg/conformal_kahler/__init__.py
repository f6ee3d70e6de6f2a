"""
共形 Kähler 分析流程：配置、讀檔、分析、報告、驗證與 CLI
"""
